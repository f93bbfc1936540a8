"""Command-line surface: run, sweep, fdm and verify subcommands."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from frac_oga import __version__
from frac_oga.app import fdm_study, run_experiment, run_sweep, setup_logging, write_fdm_study
from frac_oga.config import FORMAT_ALIASES, ExperimentConfig, SweepConfig, parse_int_list
from frac_oga.errors import ConfigError, FracOgaError, InputError, NumericalError
from frac_oga.export.tables import render_fdm_table
from frac_oga.verify import CHECKS, format_report, run_checks

_log = logging.getLogger("frac_oga.cli")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2
EXIT_VERIFY_FAILED = 3


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(error, (ConfigError, InputError, OSError)):
        return EXIT_INVALID
    return EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frac-oga",
        description="Orthogonal greedy solver for the discrete 1D fractional Laplacian.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (env FRAC_OGA_LOG_LEVEL)")
    parser.add_argument("--log-file", type=Path, default=None, help="also write logs to this file")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment and write its convergence table")
    run_p.add_argument("--config", type=Path, required=True)
    run_p.add_argument("--out", type=Path, default=None, help="overrides output_path from the config")
    run_p.add_argument("--format", choices=("csv", "md"), default=None)

    sweep_p = sub.add_parser("sweep", help="run every (alpha, k, M) cell of a sweep config")
    sweep_p.add_argument("--config", type=Path, required=True)
    sweep_p.add_argument("--out-dir", type=Path, required=True)
    sweep_p.add_argument("--workers", type=int, default=None, help="overrides workers from the config")

    fdm_p = sub.add_parser("fdm", help="direct FDM solve convergence table against the exact solution")
    fdm_p.add_argument("--alpha", type=float, required=True)
    fdm_p.add_argument("--grids", default="128,256,512", help="comma-separated grid interval counts")
    fdm_p.add_argument("--out", type=Path, default=None, help="write the table here instead of stdout")
    fdm_p.add_argument("--format", choices=("csv", "md"), default="csv")

    verify_p = sub.add_parser("verify", help="run the built-in verification checks")
    verify_p.add_argument("--only", action="append", default=None, metavar="CHECK", help="run only this check")
    verify_p.add_argument("--list", action="store_true", help="print the check names and exit")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    config = ExperimentConfig.load(args.config)
    fmt = FORMAT_ALIASES[args.format] if args.format else None
    outcome = run_experiment(config, out=args.out, output_format=fmt)
    print(outcome.table_path)
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    sweep = SweepConfig.load(args.config)
    outcome = run_sweep(sweep, args.out_dir, workers=args.workers)
    print(outcome.index_path)
    if outcome.ok:
        return EXIT_OK
    for table, error in outcome.failures.items():
        print(f"error: {table}: {error}", file=sys.stderr)
    return max(exit_code_for(e) for e in outcome.failures.values())


def _cmd_fdm(args: argparse.Namespace) -> int:
    grids = parse_int_list("grids", args.grids)
    fmt = FORMAT_ALIASES[args.format]
    records = fdm_study(args.alpha, grids)
    if args.out is None:
        sys.stdout.write(render_fdm_table(records, fmt))
    else:
        print(write_fdm_study(args.out, records, fmt))
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    if args.list:
        for name in CHECKS:
            print(name)
        return EXIT_OK
    results = run_checks(args.only)
    sys.stdout.write(format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY_FAILED


_COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "fdm": _cmd_fdm, "verify": _cmd_verify}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; those are invalid arguments here.
        return EXIT_OK if e.code in (0, None) else EXIT_INVALID
    try:
        setup_logging(args.log_level, args.log_file)
        return _COMMANDS[args.command](args)
    except (FracOgaError, OSError) as e:
        _log.debug("command_failed command=%s", args.command, exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)
