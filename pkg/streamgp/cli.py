"""
Command-line Module for streamgp

    streamgp run <config> [--seed N] [--out report.csv] [--quiet]
    streamgp synth <kind> <n> <seed> <out.csv> [--noise SD] [--quiet]
    streamgp oracle-check <config> [--seed N] [--quiet]

Exit codes: 0 success, 1 usage or input error, 2 numerical failure (including
a failed oracle check).
High cohesion: Contains only argument parsing and exit-code mapping.
Low coupling: Delegates all work to config, data, experiment and oracle.
"""

import argparse
import logging
import sys
from dataclasses import fields
from typing import List, Optional

from .config import ExperimentConfig, load_config, with_overrides
from .constants import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE
from .data import SYNTHETIC_KINDS, generate_synthetic, write_csv
from .errors import InputError, NumericalError
from .experiment import run_experiment
from .logger import ROOT_LOGGER, get_logger, setup_logger
from .oracle import format_table, oracle_check

logger = get_logger("cli")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with EXIT_USAGE instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _config_keys() -> str:
    return "config keys: " + ", ".join(f.name for f in fields(ExperimentConfig))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="only log warnings and errors")

    parser = _Parser(prog="streamgp", description="Online sparse GP regression with HiPPO inducing variables.")
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)
    commands.required = True

    run = commands.add_parser("run", parents=[common], help="run a streaming benchmark",
                              epilog=_config_keys())
    run.add_argument("config", help="flat 'key = value' experiment file")
    run.add_argument("--seed", type=int, default=None, help="override the configured seed")
    run.add_argument("--out", default=None, help="CSV report path (default: configured output or stdout)")

    synth = commands.add_parser("synth", parents=[common], help="write a synthetic dataset")
    synth.add_argument("kind", choices=SYNTHETIC_KINDS)
    synth.add_argument("n", type=int)
    synth.add_argument("seed", type=int)
    synth.add_argument("out", help="output CSV path")
    synth.add_argument("--noise", type=float, default=0.1, help="observation noise standard deviation")

    oracle = commands.add_parser("oracle-check", parents=[common], help="run the recurrence self-checks",
                                 epilog=_config_keys())
    oracle.add_argument("config")
    oracle.add_argument("--seed", type=int, default=None)
    return parser


def _cmd_run(args) -> int:
    config = with_overrides(load_config(args.config), args.seed, args.out)
    report = run_experiment(config)
    if not config.output:
        report.write_csv(sys.stdout)
    return EXIT_OK


def _cmd_synth(args) -> int:
    data = generate_synthetic(args.kind, args.n, args.noise, args.seed)
    write_csv(data, args.out, "multidim" if args.kind == "two-cluster-2d" else "timeseries")
    logger.info(f"Wrote {data.size} {args.kind} points to {args.out}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    config = with_overrides(load_config(args.config), args.seed)
    rows = oracle_check(config)
    print(format_table(rows))
    failed = [r.name for r in rows if not r.passed]
    if failed:
        logger.error(f"Oracle checks failed: {', '.join(failed)}")
        return EXIT_NUMERICAL
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "synth": _cmd_synth, "oracle-check": _cmd_oracle}


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    setup_logger(ROOT_LOGGER, logging.WARNING if args.quiet else logging.INFO)
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        logger.error(f"Numerical failure: {exc}")
        return EXIT_NUMERICAL
    except (InputError, OSError) as exc:
        logger.error(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
