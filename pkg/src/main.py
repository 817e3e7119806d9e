"""
Command-line entry point for the qubit-controller thermal-stability twin.

    python -m src.main run --scenario scenarios/default.yaml --control off --seed 7
    python -m src.main compare runs/default_on_seed7 runs/default_off_seed7
    python -m src.main fidelity runs/default_on_seed7/stats.csv --budget 1e-5
    python -m src.main calibrate --verify
    python -m src.main clock-skew

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

import argparse
import sys
from typing import List, Optional

from src.commands import COMMAND_MODULES
from src.constants import SOFTWARE_NAME, SOFTWARE_VERSION
from src.exceptions import ConfigurationError, SimulatorError
from src.utils.logging import get_logger, run_context, setup_logging

logger = get_logger("main")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=SOFTWARE_NAME,
        description="Digital twin of a thermally stabilized multichannel qubit controller",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {SOFTWARE_VERSION}")
    parser.add_argument("--log-level", default=None, help="Override LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in COMMAND_MODULES:
        module.add_parser(subparsers)
    return parser


def report_error(exc: SimulatorError) -> None:
    print(f"error: {exc}", file=sys.stderr)
    if isinstance(exc, ConfigurationError) and exc.diagnostics != [str(exc)]:
        for diagnostic in exc.diagnostics:
            print(f"  {diagnostic}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(log_level=args.log_level)
    logger.debug("command_started", command=args.command)
    try:
        with run_context(command=args.command):
            return args.handler(args)
    except SimulatorError as exc:
        logger.error("command_failed", command=args.command, error=str(exc), error_type=type(exc).__name__)
        report_error(exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
