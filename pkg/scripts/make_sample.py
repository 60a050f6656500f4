"""Write the synthetic three-level cell as a graymap plus its model file.

The pair can be fed back through ``zeno-tomo simulate --input ... --model ...``.
"""
import argparse
from pathlib import Path

from zeno_tomo.cli import CELL_ALPHAS, CELL_TAUS
from zeno_tomo.pgm import default_model, write_pgm
from zeno_tomo.simulator import synthetic_cell


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--width", type=int, default=100)
    ap.add_argument("--height", type=int, default=100)
    ap.add_argument("--outdir", type=Path, default=Path("out/sample"))
    args = ap.parse_args()

    mfile = default_model(CELL_TAUS, CELL_ALPHAS)
    img = synthetic_cell(args.width, args.height, CELL_ALPHAS)
    args.outdir.mkdir(parents=True, exist_ok=True)
    write_pgm(args.outdir / "cell.pgm", mfile.gray_values(img))
    (args.outdir / "cell_model.json").write_text(mfile.to_json() + "\n")
    print(f"wrote {args.outdir / 'cell.pgm'} and {args.outdir / 'cell_model.json'}")


if __name__ == "__main__":
    main()
