"""Command-line interface: ``rsgd-lab <command> [options]``.

Commands:
  gen-data   write the dataset of a config
  run        run every seed of a config, write telemetry CSVs and summary.json
  compare    run several configs and report grad-norm^2 versus SFO frontiers
  analyze    evaluate the convergence bounds and SFO complexities of a config
  tradeoff   tabulate the exponential-growth hyperparameter trade-off curves
  plot       render telemetry CSVs into a PNG

Exit codes: 0 success, 2 invalid config, arguments, data or paths, 3 a run failed.
"""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import bound_report, tradeoff_curves
from .config import load_config
from .errors import (
    ConfigError,
    DataFormatError,
    DivergedError,
    InfeasibleBudgetError,
    InvalidArgumentError,
    NondifferentiablePointError,
    NumericalDegeneracyError,
)
from .experiment import compare_experiments, generate_dataset, run_experiment
from .plotting import X_AXES, Y_AXES, plot_runs

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RUN_FAILED = 3

_INVALID = (ConfigError, InvalidArgumentError, DataFormatError, InfeasibleBudgetError, OSError)
_RUN_FAILED = (DivergedError, NumericalDegeneracyError, NondifferentiablePointError)


def _float_list(text, count, name):
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InvalidArgumentError(f"--{name} expects comma-separated numbers, got {text!r}") from None
    if len(values) not in count:
        raise InvalidArgumentError(f"--{name} expects {' or '.join(map(str, count))} values")
    return values


def _seeds(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InvalidArgumentError(f"--seeds expects comma-separated integers, got {text!r}") from None


def parse_args(argv=None):
    parser = argparse.ArgumentParser(
        prog="rsgd-lab",
        description="Riemannian SGD with learning-rate and batch-size schedules.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress, -vv for per-evaluation telemetry")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write the dataset of a config")
    p.add_argument("--config", required=True, help="experiment JSON")
    p.add_argument("--output", help="output directory (default: run.output_dir or 'data')")

    p = sub.add_parser("run", help="run every seed of a config")
    p.add_argument("--config", required=True, help="experiment JSON")
    p.add_argument("--output", help="output directory (default: run.output_dir)")
    p.add_argument("--seeds", help="comma-separated seeds, overrides run.seeds")
    p.add_argument("--jobs", type=int, help="parallel runs, overrides run.jobs")

    p = sub.add_parser("compare", help="compare configs at matched SFO budgets")
    p.add_argument("--config", required=True, action="append", help="experiment JSON (repeatable)")
    p.add_argument("--output", default="compare", help="output directory (default: compare)")
    p.add_argument("--eps", type=float, help="report the SFO needed to reach grad-norm^2 <= eps^2")
    p.add_argument("--seeds", help="comma-separated seeds, overrides run.seeds of every config")
    p.add_argument("--jobs", type=int, help="parallel runs, overrides run.jobs")

    p = sub.add_parser("analyze", help="evaluate bounds and SFO complexities")
    p.add_argument("--config", required=True, help="experiment JSON with a bound section")
    p.add_argument("--eps", type=float, help="target accuracy, overrides bound.eps")
    p.add_argument("--output", help="also write the report to this JSON file")

    p = sub.add_parser("tradeoff", help="tabulate f(gamma), g(b0), h(M)")
    p.add_argument("--gamma", default="1.5,10,50", help="lo,hi,num (default: 1.5,10,50)")
    p.add_argument("--b0", default="2,100", help="integer range lo,hi (default: 2,100)")
    p.add_argument("--M", default="1,10", help="integer range lo,hi (default: 1,10)")
    p.add_argument("--gamma-fixed", type=float, default=3.0, help="gamma used by h(M) (default: 3)")
    p.add_argument("--output", default=".", help="directory of tradeoff.csv (default: .)")

    p = sub.add_parser("plot", help="render telemetry CSVs into a PNG")
    p.add_argument("csv", nargs="+", help="telemetry CSV files")
    p.add_argument("--output", default="telemetry.png", help="PNG path (default: telemetry.png)")
    p.add_argument("--x", choices=sorted(X_AXES), default="iter")
    p.add_argument("--y", choices=sorted(Y_AXES), default="grad_norm")
    p.add_argument("--linear", action="store_true", help="linear instead of log y axis")

    return parser.parse_args(argv)


def cmd_gen_data(args):
    config = load_config(args.config)
    output = args.output or (config.run.output_dir if config.run else "data")
    for path in generate_dataset(config, output):
        print(f"✅ wrote {path}")


def _g(value):
    return "-" if value is None else f"{value:.6g}"


def cmd_run(args):
    config = load_config(args.config)
    if args.seeds:
        config = config.with_seeds(_seeds(args.seeds))
    result = run_experiment(config, output_dir=args.output, jobs=args.jobs)
    print("| label | total_sfo | min_grad_norm_sq | final_loss |")
    print("|---|---:|---:|---:|")
    for label, entry in result.summary.items():
        print(f"| {label} | {entry['total_sfo']} | {_g(entry['min_grad_norm_sq'])} | "
              f"{_g(entry['final_loss'])} |")
    print(f"✅ wrote {len(result.csv_paths)} telemetry file(s) and {result.summary_path}")


def cmd_compare(args):
    configs = [load_config(path) for path in args.config]
    if args.seeds:
        configs = [c.with_seeds(_seeds(args.seeds)) for c in configs]
    report = compare_experiments(configs, args.output, eps=args.eps, jobs=args.jobs)
    print(report.format_table())
    if args.eps is not None:
        if report.first_to_eps:
            print(f"🏁 first to grad-norm^2 <= {args.eps:g}^2: {report.first_to_eps}")
        else:
            print(f"⚠️  no configuration reached grad-norm^2 <= {args.eps:g}^2")
    print(f"✅ wrote {Path(args.output) / 'compare.json'}")


def cmd_analyze(args):
    config = load_config(args.config)
    eps = args.eps if args.eps is not None else (config.bound.eps if config.bound else None)
    report = bound_report(config.bound_inputs(), eps=eps)
    text = json.dumps(report, indent=2)
    print(text)
    if args.output:
        path = Path(args.output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")


def cmd_tradeoff(args):
    g_lo, g_hi, g_num = _float_list(args.gamma, (3,), "gamma")
    b_lo, b_hi = _float_list(args.b0, (2,), "b0")
    m_lo, m_hi = _float_list(args.M, (2,), "M")
    if int(g_num) != g_num or g_num < 1:
        raise InvalidArgumentError("--gamma needs an integer number of points")
    tables = tradeoff_curves(
        np.linspace(g_lo, g_hi, int(g_num)),
        np.arange(int(b_lo), int(b_hi) + 1),
        np.arange(int(m_lo), int(m_hi) + 1),
        gamma_fixed=args.gamma_fixed,
    )
    path = Path(args.output) / "tradeoff.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["curve", "x", "value"])
        for name, x, value in tables.rows():
            writer.writerow([name, format(x, ".17g"), format(value, ".17g")])
    print(f"f(gamma) = 1 + gamma/(gamma-1): {tables.f[0]:.6g} .. {tables.f[-1]:.6g}")
    print(f"g(b0) = b0^3/(b0^2-1):          {tables.g[0]:.6g} .. {tables.g[-1]:.6g}")
    print(f"h(M) = {tables.gamma_fixed:g}^M/M:                {tables.h[0]:.6g} .. {tables.h[-1]:.6g}")
    print(f"✅ wrote {path}")


def cmd_plot(args):
    path = plot_runs(args.csv, args.output, x=args.x, y=args.y, log_y=not args.linear)
    print(f"✅ wrote {path}")


COMMANDS = {
    "gen-data": cmd_gen_data,
    "run": cmd_run,
    "compare": cmd_compare,
    "analyze": cmd_analyze,
    "tradeoff": cmd_tradeoff,
    "plot": cmd_plot,
}


def main(argv=None):
    args = parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except _INVALID as exc:
        print(f"❌ {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except _RUN_FAILED as exc:
        print(f"❌ {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
