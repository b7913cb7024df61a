"""Command-line entry point: ``polarbandit {run,scalability,sensitivity,rsc}``.

Exit codes: 0 on success, 2 for configuration errors, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from .errors import ConfigError, NumericalError, ParseError
from .experiment import (ExperimentConfig, loglog_slope, read_config_file, run_experiment,
                         run_rsc, run_scalability, run_sensitivity)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

# flag help, keyed by config field; every field gets a kebab-case flag
_HELP = {
    "graph": "base graph family (er, sbm) or bundled dataset name",
    "edge_list": "path to a whitespace-separated edge list (overrides --graph and --n)",
    "regime": "arm generation: local perturbations or diverse fresh graphs",
    "num_edits": "edge edits per local arm (default: n)",
    "allow_edge_removal": "let each local edit remove weight with probability 1/2",
    "t1_rule": "exploration length rule: sqrt, theory or explicit",
    "ell_s": "lower bound on ||s||^2 for --t1-rule theory",
    "kappa": "curvature value for --t1-rule theory",
    "lambda_scale": "multiplier applied to the nuclear-norm weight schedule",
    "lambda_nuc": "explicit nuclear-norm weight (overrides the schedule)",
    "lx_mode": "action norm bound: sqrt (sqrt n) or n",
    "algorithms": "comma-separated subset of estr,full_oful,oracle",
    "workers": "process pool size for repetitions (0: all CPUs)",
    "output": "output directory for CSV files",
    "dump_stage1": "also write each repetition's Stage-1 estimate",
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_config_flags(parser):
    parser.add_argument("--config", help="key = value file overriding the defaults")
    for name in ExperimentConfig.field_names():
        parser.add_argument(_flag(name), dest=name, default=None, metavar="VALUE",
                            help=_HELP.get(name))


def _config_from_args(args, required_seed: bool) -> ExperimentConfig:
    values = {}
    if args.config:
        try:
            values.update(read_config_file(args.config))
        except OSError as exc:
            raise ConfigError("config", str(exc)) from None
    for name in ExperimentConfig.field_names():
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if required_seed and values.get("seed") in (None, ""):
        raise ConfigError("seed", "--seed is required")
    return ExperimentConfig.from_mapping(values)


def _parse_list(text, conv, name):
    try:
        return [conv(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(name, f"cannot parse {text!r}") from None


def _write_csv(path, header, rows):
    out = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_run(args):
    cfg = _config_from_args(args, required_seed=True)
    result = run_experiment(cfg)
    for algo in cfg.algorithms:
        print(f"{algo:10s} final regret {result.mean_final(algo):12.4f}   "
              f"runtime {result.mean_runtime(algo):8.3f}s")
    print(f"wrote {result.per_round_path} and {result.summary_path}")


def cmd_scalability(args):
    cfg = _config_from_args(args, required_seed=False)
    ns = _parse_list(args.ns, int, "ns")
    rows = run_scalability(cfg, ns, args.reps)
    _write_csv(args.csv, ("n", "mean_seconds", "std_seconds"), rows)
    if len(rows) > 1:
        print(f"log-log slope {loglog_slope([r[0] for r in rows], [r[1] for r in rows]):.3f}",
              file=sys.stderr)


def cmd_sensitivity(args):
    cfg = _config_from_args(args, required_seed=False)
    conv = float if args.axis == "sigma" else int
    rows = run_sensitivity(cfg, args.axis, _parse_list(args.values, conv, "values"))
    _write_csv(args.csv, ("axis", "value", "algo", "regret_mean", "regret_std"), rows)


def cmd_rsc(args):
    row = run_rsc(args.family, args.regime, args.n, args.K, args.trials, args.seed,
                  num_edits=args.num_edits, restarts=args.restarts, iters=args.iters)
    header = ("family", "regime", "n", "K", "kappa_min", "kappa_hat_mean", "kappa_hat_std",
              "kappa_min_centered")
    _write_csv(args.csv, header, [tuple(row[h] for h in header)])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polarbandit",
                                     description="Online polarization and disagreement "
                                                 "minimisation simulator.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="paired repetitions of the chosen algorithms")
    _add_config_flags(run)
    run.set_defaults(func=cmd_run)

    scal = sub.add_parser("scalability", help="ESTR wall time as a function of n")
    _add_config_flags(scal)
    scal.add_argument("--ns", required=True, help="ascending comma-separated node counts")
    scal.add_argument("--reps", type=int, default=None, help="timings per n")
    scal.add_argument("--csv", default="-", help="output CSV (default stdout)")
    scal.set_defaults(func=cmd_scalability)

    sens = sub.add_parser("sensitivity", help="final regret across sigma or K values")
    _add_config_flags(sens)
    sens.add_argument("--axis", choices=("sigma", "K"), required=True)
    sens.add_argument("--values", required=True, help="comma-separated values")
    sens.add_argument("--csv", default="-", help="output CSV (default stdout)")
    sens.set_defaults(func=cmd_sensitivity)

    rsc = sub.add_parser("rsc", help="kappa_min and kappa-hat diagnostics")
    rsc.add_argument("--family", choices=("er", "sbm"), default="er")
    rsc.add_argument("--regime", choices=("local", "diverse"), default="diverse")
    rsc.add_argument("--n", type=int, default=32)
    rsc.add_argument("--K", type=int, default=100)
    rsc.add_argument("--trials", type=int, default=25)
    rsc.add_argument("--num-edits", type=int, default=None, help="default: 2n")
    rsc.add_argument("--restarts", type=int, default=10)
    rsc.add_argument("--iters", type=int, default=300)
    rsc.add_argument("--seed", type=int, default=0)
    rsc.add_argument("--csv", default="-", help="output CSV (default stdout)")
    rsc.set_defaults(func=cmd_rsc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ConfigError, ParseError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except KeyboardInterrupt:
        print("interrupted; completed repetitions were flushed", file=sys.stderr)
        return 130
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
