"""Command-line front end: ``zeno-tomo {probs,ratio,simulate,crlb,rules}``.

Tables go to stdout (or ``--outdir``) as CSV; diagnostics go to stderr. The
exit status is 0 only when every requested grid point was computed.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from zeno_tomo import decision, estimation, interferometer as ifm, pgm, simulator

log = logging.getLogger("zeno_tomo")

RATIO_TAUS = (0.8, 0.9, 0.95, 0.97)
CELL_TAUS = (0.8, 0.96, 0.99)
CELL_ALPHAS = (0.93, 0.07, 0.02)
CELL_LOOPS = (10, 165)
CELL_ABSORBED = (1.7, 2.3, 4.0, 13.0)
DEFAULT_ALPHA_GRID = tuple(round(0.01 * k, 2) for k in range(1, 98))


class GridFailures:
    """Collects failing grid points; each is reported on stderr once."""

    def __init__(self):
        self.items: list[str] = []

    def add(self, where: str, exc: Exception) -> None:
        msg = f"{where}: {exc}"
        self.items.append(msg)
        print(f"error: {msg}", file=sys.stderr)

    @property
    def exit_code(self) -> int:
        return 1 if self.items else 0


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.10g}"


def write_csv(stream, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def _flatten(groups) -> list:
    return [x for g in groups for x in g] if groups else []


def _output(args, name: str):
    if args.outdir is None:
        return sys.stdout, None
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    fh = open(out / name, "w", newline="")
    return fh, fh


# --------------------------------------------------------------------------
# probs


PROBS_HEADER = (
    "L", "tau", "p_z", "p_o", "p_a", "tau_eff", "regime_flag",
    "p_z_asym", "p_o_asym", "p_a_asym",
)


def cmd_probs(args) -> int:
    failures = GridFailures()
    rows = []
    for loops in _flatten(args.loops) or [2000]:
        for tau in _flatten(args.tau) or [0.98, 0.99]:
            try:
                cfg = ifm.ApparatusConfig(loops, tau)
                pr = ifm.zeno_probabilities(cfg)
            except (ValueError, ArithmeticError) as exc:
                failures.add(f"L={loops} tau={tau}", exc)
                continue
            zeno = ifm.in_zeno_regime(cfg)
            asym = ifm.zeno_probabilities_asymptotic(cfg) if zeno else None
            rows.append(
                (
                    loops, tau, pr.p_z, pr.p_o, pr.p_a, math.sqrt(1 - pr.p_a),
                    "zeno" if zeno else "rotation",
                    *(asym.as_tuple() if asym else (None, None, None)),
                )
            )
    stream, fh = _output(args, "probs.csv")
    try:
        write_csv(stream, PROBS_HEADER, rows)
    finally:
        if fh:
            fh.close()
    return failures.exit_code


# --------------------------------------------------------------------------
# ratio


RATIO_HEADER = (
    "tau", "dtau", "L", "target_pe", "alpha", "ratio",
    "n_zeno", "n_standard", "absorbed_zeno", "absorbed_standard",
)


def cmd_ratio(args) -> int:
    if args.particles is not None or args.absorbed is not None:
        print("error: ratio is driven by --target-pe only", file=sys.stderr)
        return 2
    failures = GridFailures()
    pe = args.target_pe[0] if args.target_pe else 0.005
    loops_list = _flatten(args.loops) or [2000]
    alphas = _flatten(args.alpha) or list(DEFAULT_ALPHA_GRID)
    rows = []
    for loops in loops_list:
        for tau in _flatten(args.tau) or list(RATIO_TAUS):
            try:
                curve = simulator.irradiation_ratio_curve(tau, args.dtau, loops, pe, alphas)
            except (ValueError, ArithmeticError) as exc:
                failures.add(f"tau={tau} L={loops}", exc)
                continue
            for p in curve:
                if p.error:
                    failures.add(f"tau={tau} L={loops} alpha={p.alpha}", ValueError(p.error))
                rows.append(
                    (tau, args.dtau, loops, pe, p.alpha, p.ratio, p.n_zeno, p.n_standard,
                     p.absorbed_zeno, p.absorbed_standard)
                )
    stream, fh = _output(args, "ratio.csv")
    try:
        write_csv(stream, RATIO_HEADER, rows)
    finally:
        if fh:
            fh.close()
    return failures.exit_code


# --------------------------------------------------------------------------
# crlb


CRLB_HEADER = (
    "tau", "L", "n_particles", "var_standard", "var_zeno", "bound_per_absorbed",
    "n_absorbed_standard", "n_absorbed_zeno", "residual_standard", "residual_zeno",
    "n_absorbed_zeno_exact", "rel_residual_zeno_exact",
)


def cmd_crlb(args) -> int:
    if args.target_pe is not None:
        print("error: crlb takes --particles or --absorbed, not --target-pe", file=sys.stderr)
        return 2
    failures = GridFailures()
    taus = _flatten(args.tau) or [round(0.1 * k, 1) for k in range(1, 10)]
    rows = []
    for loops in _flatten(args.loops) or [10_000]:
        for tau in taus:
            try:
                if args.absorbed is not None:
                    n = args.absorbed[0] / (1 - tau * tau)
                else:
                    n = float(args.particles[0] if args.particles else 1000)
                rep = estimation.crlb_report(tau, n, loops)
                p_a_exact = ifm.zeno_probabilities(ifm.ApparatusConfig(loops, tau)).p_a
                n_a_exact = n * p_a_exact
                rel = (
                    math.sqrt(rep.variance_bound_zeno)
                    / estimation.crlb_per_absorbed(tau, n_a_exact)
                    - 1.0
                )
            except (ValueError, ArithmeticError) as exc:
                failures.add(f"tau={tau} L={loops}", exc)
                continue
            rows.append(
                (tau, loops, n, rep.variance_bound_standard, rep.variance_bound_zeno,
                 rep.bound_per_absorbed, rep.n_absorbed_standard, rep.n_absorbed_zeno,
                 rep.residual_standard, rep.residual_zeno, n_a_exact, rel)
            )
    stream, fh = _output(args, "crlb.csv")
    try:
        write_csv(stream, CRLB_HEADER, rows)
    finally:
        if fh:
            fh.close()
    return failures.exit_code


# --------------------------------------------------------------------------
# rules


def _level_probs(tau: float, loops: int, asymptotic: bool) -> ifm.ChannelProbabilities:
    cfg = ifm.ApparatusConfig(loops, tau)
    return ifm.zeno_probabilities_asymptotic(cfg) if asymptotic else ifm.zeno_probabilities(cfg)


def decision_report(
    model: decision.GrayModel, loops: int, n_particles: int, asymptotic: bool = False
) -> dict:
    """Decision data for every adjacent pair of levels, as plain JSON-able values."""
    pairs = []
    for i in range(len(model) - 1):
        lv1, lv2 = model.levels[i], model.levels[i + 1]
        alpha = lv1.alpha / (lv1.alpha + lv2.alpha)
        entry: dict = {"levels": [i, i + 1], "tau": [lv1.tau, lv2.tau], "alpha_pair": alpha}
        cfg1, cfg2 = ifm.ApparatusConfig(loops, lv1.tau), ifm.ApparatusConfig(loops, lv2.tau)
        entry["zeno_regime"] = [ifm.in_zeno_regime(cfg1), ifm.in_zeno_regime(cfg2)]
        s1, s2 = ifm.standard_probabilities(lv1.tau)[1], ifm.standard_probabilities(lv2.tau)[1]
        try:
            rule = decision.binomial_threshold(s2, s1, 1 - alpha, n_particles)
            entry["standard"] = {
                "first": i + 1,
                "threshold": rule.threshold,
                "threshold_raw": rule.threshold_raw,
                "error": decision.binomial_error(s2, s1, 1 - alpha, n_particles, rule),
            }
        except ValueError as exc:
            entry["standard"] = {"error_message": str(exc)}
        try:
            p1 = _level_probs(lv1.tau, loops, asymptotic)
            p2 = _level_probs(lv2.tau, loops, asymptotic)
            lo, hi, a_lo = (p1, p2, alpha) if p1.p_a < p2.p_a else (p2, p1, 1 - alpha)
            rule = decision.binomial_threshold(lo.p_a, hi.p_a, a_lo, n_particles)
            entry["zeno_binomial"] = {
                "first": i if lo is p1 else i + 1,
                "threshold": rule.threshold,
                "threshold_raw": rule.threshold_raw,
                "error": decision.binomial_error(lo.p_a, hi.p_a, a_lo, n_particles, rule),
            }
        except ValueError as exc:
            entry["zeno_binomial"] = {"error_message": str(exc)}
        try:
            line = decision.trinomial_line(p1, p2, alpha, n_particles)
            entry["zeno_trinomial"] = {
                "slope_a": line.slope_a,
                "intercept_b": line.intercept_b,
                "witness": list(line.witness),
                "witness_level": i + line.witness_choice,
            }
        except ValueError as exc:
            entry["zeno_trinomial"] = {"error_message": str(exc)}
        pairs.append(entry)
    return {"loops": loops, "n_particles": n_particles, "asymptotic": asymptotic, "pairs": pairs}


def cmd_rules(args) -> int:
    taus = _flatten(args.tau) or list(CELL_TAUS)
    alphas = _flatten(args.alpha) or (list(CELL_ALPHAS) if taus == list(CELL_TAUS) else None)
    if alphas is None:
        print("error: --alpha is required with custom --tau", file=sys.stderr)
        return 2
    loops = (_flatten(args.loops) or [165])[0]
    try:
        model = decision.GrayModel.from_pairs(taus, alphas, normalize=True)
        if args.particles:
            n = args.particles[0]
        else:
            n_a = args.absorbed[0] if args.absorbed else 13.0
            n = simulator.particles_for_absorbed(model, simulator.Setup.zeno(loops), n_a)
        report = decision_report(model, loops, int(n), args.asymptotic)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = json.dumps(report, indent=2) + "\n"
    if args.outdir is None:
        sys.stdout.write(text)
    else:
        Path(args.outdir).mkdir(parents=True, exist_ok=True)
        (Path(args.outdir) / "rules.json").write_text(text)
    failed = any("error_message" in v for p in report["pairs"] for v in p.values() if isinstance(v, dict))
    return 1 if failed else 0


# --------------------------------------------------------------------------
# simulate


SIM_HEADER = (
    "setup", "L", "budget", "budget_value", "n_particles", "mean_absorbed_per_pixel",
    "expected_absorbed_per_pixel", "error_count", "pixels", "total_particles", "seed",
)


def _budget_label(v: float) -> str:
    return fmt(v).replace(".", "p")


def cmd_simulate(args) -> int:
    if args.target_pe is not None:
        print("error: simulate takes --particles or --absorbed, not --target-pe", file=sys.stderr)
        return 2
    if args.outdir is None:
        print("error: simulate needs --outdir", file=sys.stderr)
        return 2
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        if args.model:
            mfile = pgm.load_model(args.model)
        else:
            taus = _flatten(args.tau) or list(CELL_TAUS)
            alphas = _flatten(args.alpha) or (list(CELL_ALPHAS) if taus == list(CELL_TAUS) else None)
            if alphas is None and not args.measure_alpha:
                raise ValueError("--alpha (or --measure-alpha) is required with custom --tau")
            mfile = pgm.default_model(taus, alphas)
        if args.input:
            sample = mfile.index_image(pgm.read_pgm(args.input))
        else:
            if len(mfile.levels) != 3:
                raise ValueError("the built-in sample has three levels; pass --input")
            fr = [lv.alpha for lv in mfile.levels] if not args.measure_alpha else CELL_ALPHAS
            sample = simulator.synthetic_cell(fractions=fr)
            pgm.write_pgm(outdir / "sample.pgm", mfile.gray_values(sample))
        sample.check_levels(len(mfile.levels))
        model = mfile.gray_model(sample, measure=args.measure_alpha)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    setups = []
    for kind in args.setup or ["standard", "zeno"]:
        if kind == "standard":
            setups.append(simulator.Setup.standard())
        else:
            setups.extend(simulator.Setup.zeno(L) for L in (_flatten(args.loops) or CELL_LOOPS))

    if args.particles:
        budgets = [("particles", float(n)) for n in args.particles]
    else:
        budgets = [("absorbed", a) for a in (args.absorbed or list(CELL_ABSORBED))]

    failures = GridFailures()
    rows = []
    for kind, value in budgets:
        for setup in setups:
            tag = f"{setup.label}_{kind[0]}{_budget_label(value)}"
            try:
                if kind == "particles":
                    n = int(value)
                else:
                    n = simulator.particles_for_absorbed(model, setup, value)
                rep = simulator.reconstruct(sample, model, setup, n, args.seed)
            except (ValueError, ArithmeticError) as exc:
                failures.add(tag, exc)
                continue
            pgm.write_pgm(outdir / f"recon_{tag}.pgm", mfile.gray_values(rep.reconstructed))
            mask = np.where(rep.misinterpreted, pgm.MASK_WRONG, pgm.MASK_OK)
            pgm.write_pgm(outdir / f"mask_{tag}.pgm", mask)
            rows.append(
                (setup.kind, setup.loops, kind, value, n, rep.mean_absorbed_per_pixel,
                 n * simulator.mean_absorption(model, setup), rep.error_count,
                 sample.size, rep.total_particles, args.seed)
            )
            log.info("%s: %d misinterpreted of %d", tag, rep.error_count, sample.size)
    with open(outdir / "report.csv", "w", newline="") as fh:
        write_csv(fh, SIM_HEADER, rows)
    (outdir / "model.json").write_text(mfile.to_json() + "\n")
    return failures.exit_code


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tau", type=_floats, action="append", help="transmission amplitudes, comma-separated")
    common.add_argument("--dtau", type=float, default=0.02, help="gray-level spacing for ratio")
    common.add_argument("--alpha", type=_floats, action="append", help="prior frequencies, comma-separated")
    common.add_argument("--loops", type=_ints, action="append", help="loop counts L, comma-separated")
    budget = common.add_mutually_exclusive_group()
    budget.add_argument("--particles", type=_ints, help="particles per pixel N")
    budget.add_argument("--absorbed", type=_floats, help="mean absorbed particles per pixel N_a")
    budget.add_argument("--target-pe", type=_floats, help="target error probability")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--input", help="input graymap (P5)")
    common.add_argument("--model", help="gray-model JSON file mapping pixel values to levels")
    common.add_argument("--measure-alpha", action="store_true", help="use level frequencies measured from the image as priors")
    common.add_argument("--outdir", help="directory for output files (default: CSV on stdout)")
    common.add_argument("--setup", choices=("standard", "zeno"), action="append")
    common.add_argument("--asymptotic", action="store_true", help="use leading-order Zeno probabilities")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="zeno-tomo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_ in (
        ("probs", cmd_probs, "channel probabilities for (L, tau) grids"),
        ("ratio", cmd_ratio, "absorbed-particle ratio Zeno/standard at fixed error rate"),
        ("simulate", cmd_simulate, "Monte Carlo reconstruction of a graymap sample"),
        ("crlb", cmd_crlb, "Cramer-Rao bounds for both setups"),
        ("rules", cmd_rules, "decision rules between adjacent gray levels (JSON)"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
