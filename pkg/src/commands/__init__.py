"""CLI subcommands; each module provides add_parser() and handle()."""

from src.commands import calibrate, clock_skew, compare, fidelity, run

COMMAND_MODULES = [run, compare, fidelity, calibrate, clock_skew]

__all__ = ["COMMAND_MODULES"]
