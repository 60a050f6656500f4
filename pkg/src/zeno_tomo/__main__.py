import sys

from zeno_tomo.cli import main

sys.exit(main())
