"""Command-line entry point.

    punitive run --preset fig2-left --out results
    punitive run --config market.cfg --seed 3 --replications 10
    punitive analyze pi-bar-greedy --config market.cfg

Exit codes: 0 success, 2 configuration error, 3 market assumption violated,
4 threshold not found.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Sequence

from . import greedy, presets, strategic
from .config import Experiment, load
from .errors import AssumptionError, ConfigError, PolicyError
from .sim import MAX_SEED, replicate, run, write_trace_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSUMPTION = 3
EXIT_NOT_FOUND = 4

ANALYSES = ("pi-bar-greedy", "pi-bar-strategic", "fixed-point", "identity-check")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="punitive", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a preset or a configured simulation")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(presets.PRESETS))
    src.add_argument("--config", type=Path)
    r.add_argument("--seed", type=_seed, default=None,
                   help="base seed (default: config value, or 0)")
    r.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    r.add_argument("--replications", type=_positive_int, default=None)
    r.add_argument("--quiet", action="store_true")

    a = sub.add_parser("analyze", help="threshold searches and attractor tables")
    a.add_argument("analysis", choices=ANALYSES)
    a.add_argument("--config", type=Path, required=True)
    a.add_argument("--grid-step", type=_positive_float, default=None)
    a.add_argument("--pi-max", type=_positive_float, default=None)
    a.add_argument("--pi-step", type=_positive_float, default=None)
    a.add_argument("--pi", type=float, default=None, help="penalty for fixed-point")
    a.add_argument("--tol", type=_positive_float, default=None)
    a.add_argument("--out", type=Path, default=None, help="also write the CSV to this directory")
    a.add_argument("--csv", action="store_true", help="print CSV instead of the table")
    a.add_argument("--quiet", action="store_true")
    return parser


def format_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    lines = ["  ".join(str(x).rjust(w) for x, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(str(x).rjust(w) for x, w in zip(row, widths)) for row in rows]
    return "\n".join(lines)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


# ---------------------------------------------------------------- run

def _run_preset(args) -> int:
    seed = 0 if args.seed is None else args.seed
    reps = 10 if args.replications is None else args.replications
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{args.preset}.csv"
    if args.preset == "fig2-left":
        rows = presets.run_fig2_left(seed, reps)
        with open(path, "w", newline="") as fh:
            presets.write_fig2_left(rows, fh)
        table = [[f"{r.pi:g}", f"{r.r21:.1f}", f"{r.mean:.2f}", f"{r.stderr:.2f}"] for r in rows]
        _say(args, format_table(("pi", "r21", "u_m_bar", "stderr"), table))
    else:
        curves = presets.run_fig2_right(seed, reps)
        with open(path, "w", newline="") as fh:
            presets.write_fig2_right(curves, fh)
        table = [[f"{c.pi:g}", c.label, f"{c.u_m_bar[-1]:.2f}"] for c in curves]
        _say(args, format_table(("pi", "policy", "final u_m_bar"), table))
    _say(args, f"wrote {path}")
    return EXIT_OK


def _run_config(args) -> int:
    exp = load(args.config)
    cfg = exp.sim_config(args.seed)
    reps = exp.replications if args.replications is None else args.replications
    args.out.mkdir(parents=True, exist_ok=True)

    trace = run(cfg)
    trace_path = args.out / "trace.csv"
    with open(trace_path, "w", newline="") as fh:
        write_trace_csv(trace, fh)

    if reps > 1:
        rep = replicate(cfg, reps)
        keys = list(rep.mean)
        rows = [[k, _num(rep.mean[k]), _num(rep.stderr[k])] for k in keys]
        header = ("statistic", "mean", "stderr")
        shown = [[k, f"{rep.mean[k]:.4f}", f"{rep.stderr[k]:.4f}"] for k in keys]
    else:
        summary = trace.summary.as_dict()
        rows = [[k, _num(v)] for k, v in summary.items()]
        header = ("statistic", "value")
        shown = [[k, f"{v:.4f}"] for k, v in summary.items()]
    summary_path = args.out / "summary.csv"
    summary_path.write_text(_csv_text(header, rows))
    _say(args, format_table(header, shown))
    _say(args, f"wrote {trace_path} and {summary_path}")
    return EXIT_OK


# ------------------------------------------------------------ analyze

def _setting(args, exp: Experiment, name: str, default):
    flag = getattr(args, name)
    if flag is not None:
        return flag
    return exp.analysis.get(name, default)


def _analyze(args, exp: Experiment) -> tuple[int, list[str], list[list], list[str]]:
    """Return (exit code, header, rows, trailing notes)."""
    model = exp.model
    if args.analysis == "identity-check":
        return EXIT_OK, ["max_residual"], [[strategic.identity_check(model)]], []

    if args.analysis == "pi-bar-greedy":
        res = greedy.find_pi_bar(model, grid_step=_setting(args, exp, "grid_step", 0.1),
                                 pi_max=_setting(args, exp, "pi_max", 20.0),
                                 pi_step=_setting(args, exp, "pi_step", 0.5))
        rows = [[c.pi, c.truth_revealing, c.truthful_utility, c.best_deviation_utility, c.margin]
                for c in res.checks]
        header = ["pi", "truth_revealing", "truthful_utility", "best_deviation", "margin"]
        if res.found:
            return EXIT_OK, header, rows, [f"status: found, pi_bar = {res.pi_bar:g}"]
        return EXIT_NOT_FOUND, header, rows, ["status: not found within the scan"]

    if args.analysis == "pi-bar-strategic":
        res = strategic.find_pi_bar_strategic(exp.report, model,
                                              pi_max=_setting(args, exp, "pi_max", 1e4),
                                              tol=_setting(args, exp, "tol", 1e-3))
        rows = [[pi, u, u < res.truthful] for pi, u in zip(res.scanned, res.utilities)]
        header = ["pi", "asymptotic_utility", "below_truthful"]
        notes = [f"truthful utility = {res.truthful:.6f}"]
        if res.found:
            return EXIT_OK, header, rows, notes + [f"status: found, pi_bar = {res.pi_bar:.6g}"]
        return EXIT_NOT_FOUND, header, rows, notes + ["status: not found within the scan"]

    # fixed-point
    pi = args.pi
    if pi is None:
        pi = exp.analysis.get("pi", exp.policy.pi if exp.policy is not None else None)
    if pi is None:
        raise ConfigError("fixed-point needs a penalty: --pi, [analysis] pi or [policy] pi")
    res = strategic.fixed_points(exp.report, pi, model)
    rows = []
    for j, e in enumerate(res.entries):
        if e is None:
            rows.append([j + 1, model.support[j], 0.0, None, None, None])
        else:
            cut = None if e.n_index is None else e.n_index + 1
            rows.append([j + 1, model.support[j], e.report_prob, e.d_star, cut, e.residual])
    header = ["j", "phi_j", "report_prob", "d_star", "n_index", "residual"]
    util = strategic.asymptotic_utility(exp.report, pi, model)
    return EXIT_OK, header, rows, [f"pi = {pi:g}, asymptotic utility = {util:.6f}"]


def _shown(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, int):
        return str(x)
    return f"{x:.6g}" if abs(x) >= 1e-4 or x == 0 else f"{x:.3e}"


def _run_analysis(args) -> int:
    exp = load(args.config)
    code, header, rows, notes = _analyze(args, exp)
    text = _csv_text(header, [[_num(x) for x in row] for row in rows])
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"{args.analysis}.csv").write_text(text)
    if args.csv:
        sys.stdout.write(text)
    elif not args.quiet:
        print(format_table(header, [[_shown(x) for x in row] for row in rows]))
        for note in notes:
            print(note)
    elif code == EXIT_NOT_FOUND:
        print(notes[-1], file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run_preset(args) if args.preset else _run_config(args)
        return _run_analysis(args)
    except AssumptionError as exc:
        print(f"error: market assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (ConfigError, PolicyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # remaining validation failures (e.g. grid limits) are input problems
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
