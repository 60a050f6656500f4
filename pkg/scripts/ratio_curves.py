"""Absorbed-particle ratio (Zeno / standard) versus the dark-level frequency.

Writes ratio.csv and prints a coarse table. Plot the CSV with any tool.
"""
import argparse
import sys
from pathlib import Path

from zeno_tomo.cli import DEFAULT_ALPHA_GRID, RATIO_TAUS, RATIO_HEADER, write_csv
from zeno_tomo.simulator import irradiation_ratio_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--loops", type=int, default=2000)
    ap.add_argument("--dtau", type=float, default=0.02)
    ap.add_argument("--target-pe", type=float, default=0.005)
    ap.add_argument("--out", type=Path, default=Path("out/ratio/ratio.csv"))
    args = ap.parse_args()

    rows = []
    curves = {}
    for tau in RATIO_TAUS:
        curve = irradiation_ratio_curve(tau, args.dtau, args.loops, args.target_pe, DEFAULT_ALPHA_GRID)
        curves[tau] = {p.alpha: p.ratio for p in curve}
        for p in curve:
            rows.append((tau, args.dtau, args.loops, args.target_pe, p.alpha, p.ratio,
                         p.n_zeno, p.n_standard, p.absorbed_zeno, p.absorbed_standard))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        write_csv(fh, RATIO_HEADER, rows)

    shown = (0.1, 0.3, 0.5, 0.7, 0.9, 0.97)
    print("alpha   " + "".join(f"{a:>8}" for a in shown))
    for tau, c in curves.items():
        print(f"tau={tau:<4}" + "".join(f"{c[a]:8.3f}" for a in shown))
    print(f"wrote {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
