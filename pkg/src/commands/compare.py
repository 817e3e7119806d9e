"""
`compare` subcommand: ratio report between two runs of the same scenario.
"""

import argparse
from pathlib import Path
from typing import Optional, Tuple

import pandas as pd

from src.config import settings
from src.constants import (
    COMPARISON_FILE,
    COMPARISON_SUMMARY_FILE,
    ERROR_SCENARIO_MISMATCH,
    MERGED_SERIES_FILE,
    PLOT_SERIES_FILE,
    STATS_FILE,
)
from src.exceptions import ConfigurationError
from src.services.analysis import StatsComparison, compare_stats
from src.storage import ensure_dir, read_manifest, read_stats_csv, write_frame, write_text
from src.utils.logging import get_logger

logger = get_logger("commands.compare")


def _labels(control_a: str, control_b: str, label: Optional[str]) -> Tuple[str, str]:
    if label:
        return f"{label}_a", f"{label}_b"
    if control_a != control_b:
        return control_a, control_b
    return "a", "b"


def merged_series(run_a: Path, run_b: Path, label_a: str, label_b: str) -> Optional[pd.DataFrame]:
    """Both plot series in one long table with a `run` column, or None if either is missing."""
    frames = []
    for run_dir, label in ((run_a, label_a), (run_b, label_b)):
        path = Path(run_dir) / PLOT_SERIES_FILE
        if not path.exists():
            return None
        frame = pd.read_csv(path)
        frame.insert(0, "run", label)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def cmd_compare(run_a: Path, run_b: Path, out: Optional[Path] = None, label: Optional[str] = None) -> StatsComparison:
    """
    Compare two run directories channel by channel (ratios b/a).

    Raises:
        ConfigurationError: The runs were made from different scenarios
        ReportFormatError: A stats file is malformed
    """
    manifest_a = read_manifest(run_a)
    manifest_b = read_manifest(run_b)
    if manifest_a.scenario_hash != manifest_b.scenario_hash:
        raise ConfigurationError(ERROR_SCENARIO_MISMATCH.format(
            hash_a=manifest_a.scenario_hash[:12], hash_b=manifest_b.scenario_hash[:12],
        ))
    label_a, label_b = _labels(manifest_a.control_mode, manifest_b.control_mode, label)
    comparison = compare_stats(read_stats_csv(Path(run_a) / STATS_FILE), read_stats_csv(Path(run_b) / STATS_FILE))

    out_dir = ensure_dir(out or Path(settings.output_dir) / f"compare_{Path(run_a).name}_vs_{Path(run_b).name}")
    write_frame(comparison.table, out_dir / COMPARISON_FILE)
    summary = comparison.summary_text(label_a, label_b)
    write_text(summary, out_dir / COMPARISON_SUMMARY_FILE)
    merged = merged_series(run_a, run_b, label_a, label_b)
    if merged is not None:
        write_frame(merged, out_dir / MERGED_SERIES_FILE)
    logger.info("comparison_written", out=str(out_dir), doubled=comparison.more_than_doubled())
    print(summary)
    return comparison


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("compare", help="Compare two run directories")
    parser.add_argument("run_a", type=Path, help="Reference run (denominator)")
    parser.add_argument("run_b", type=Path, help="Compared run (numerator)")
    parser.add_argument("--out", type=Path, default=None, help="Directory for the comparison files")
    parser.add_argument("--label", default=None, help="Prefix for the run labels in the report")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    cmd_compare(args.run_a, args.run_b, out=args.out, label=args.label)
    return 0
