"""Command-line front end.

Reads one INI run configuration, executes the selected verification
experiments, writes one CSV per experiment plus a JSON summary (and SVG
plots on request), and folds the outcome into the exit code:

    0   every selected experiment passed its checks
    1   at least one acceptance check failed
    2   the configuration (or a command-line override) is invalid
"""

from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENT_NAMES, ConfigError, load_config
from .experiments import run_experiments, write_reports


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bhcone",
        description="Run light-cone verification experiments on a "
                    "configured lattice boson instance.",
    )
    parser.add_argument("config", help="path to the INI run configuration")
    parser.add_argument(
        "-e", "--experiments", metavar="NAMES",
        help="comma-separated subset to run (default: the [experiments] "
             "run list); known: " + ", ".join(EXPERIMENT_NAMES),
    )
    parser.add_argument(
        "-o", "--output-dir", metavar="DIR",
        help="write reports here instead of the configured directory",
    )
    parser.add_argument(
        "--seed", metavar="N", help="override the configured RNG seed",
    )
    parser.add_argument(
        "--plots", action="store_true",
        help="also write SVG plots (requires matplotlib)",
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true",
        help="print fitted exponents and per-experiment notes",
    )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    names = None
    if args.experiments:
        names = tuple(
            token.strip() for token in args.experiments.split(",")
            if token.strip()
        )
    try:
        cfg = load_config(
            args.config,
            experiments=names,
            output_dir=args.output_dir,
            seed=args.seed,
            plots=True if args.plots else None,
        )
        reports = run_experiments(cfg)
        written = write_reports(reports, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2

    for report in reports:
        print(report.describe(args.verbose))
    print(f"wrote {len(written)} files to {cfg.output_dir}")
    if all(report.passed for report in reports):
        print("all experiments pass")
        return 0
    failed = ", ".join(r.name for r in reports if not r.passed)
    print(f"acceptance failure in: {failed}")
    return 1


if __name__ == "__main__":
    sys.exit(main())
