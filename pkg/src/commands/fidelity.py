"""
`fidelity` subcommand: infidelity report from a stats CSV.
"""

import argparse
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

from src.config import settings
from src.constants import INFIDELITY_FILE
from src.models.schemas import FidelityRow
from src.services.analysis import ChannelSeries, StabilityStats
from src.services.fidelity import infidelity_from_stats, series_infidelity, worst_case
from src.storage import ensure_dir, read_stats_csv, write_frame
from src.utils.logging import get_logger

logger = get_logger("commands.fidelity")


def infidelity_rows(
    stats: Sequence[StabilityStats],
    budget: float,
    series: Optional[Sequence[ChannelSeries]] = None,
) -> List[FidelityRow]:
    """
    One row per channel with exact and small-angle infidelities.

    When the pulse series are available the distribution-averaged
    infidelities are added alongside the std substitution.
    """
    by_channel = {s.channel_id: s for s in series or []}
    rows = []
    for s in sorted(stats, key=lambda item: item.channel_id):
        amp, phase = infidelity_from_stats(s)
        amp_series = phase_series = None
        if s.channel_id in by_channel:
            amp_series, phase_series = series_infidelity(by_channel[s.channel_id])
        rows.append(FidelityRow(
            unit=s.channel_id.unit,
            channel=s.channel_id.ch,
            amp_infidelity=amp.exact,
            amp_infidelity_small=amp.small_angle,
            phase_infidelity=phase.exact,
            phase_infidelity_small=phase.small_angle,
            amp_infidelity_series=amp_series,
            phase_infidelity_series=phase_series,
            over_budget=max(amp.exact, phase.exact) > budget,
        ))
    return rows


def infidelity_frame(rows: Sequence[FidelityRow]) -> pd.DataFrame:
    frame = pd.DataFrame([row.model_dump() for row in rows], columns=list(FidelityRow.model_fields))
    return frame.dropna(axis=1, how="all")


def render_report(rows: Sequence[FidelityRow], budget: float) -> str:
    lines = [f"{'Unit':>4} {'Ch':>3} {'1-F amp':>12} {'1-F phase':>12}  budget {budget:.1e}"]
    for row in rows:
        flag = "OVER" if row.over_budget else "ok"
        lines.append(f"{row.unit:>4d} {row.channel:>3d} {row.amp_infidelity:>12.3e} {row.phase_infidelity:>12.3e}  {flag}")
    worst_amp = max((row.amp_infidelity for row in rows), default=0.0)
    worst_phase = max((row.phase_infidelity for row in rows), default=0.0)
    over = sum(row.over_budget for row in rows)
    lines.append(f"Worst case: amplitude {worst_amp:.3e}, phase {worst_phase:.3e}; {over} channel(s) over budget")
    return "\n".join(lines)


def cmd_fidelity(stats_csv: Path, budget: Optional[float] = None, out: Optional[Path] = None) -> List[FidelityRow]:
    """
    Compute and print the infidelity report of a stats CSV.

    Args:
        stats_csv: Stats file written by `run`
        budget: Per-channel infidelity budget (settings.fidelity_budget if None)
        out: Optional directory receiving infidelity.csv

    Returns:
        Report rows

    Raises:
        ReportFormatError: Malformed CSV, with the row number
    """
    budget = settings.fidelity_budget if budget is None else budget
    stats = read_stats_csv(stats_csv)
    rows = infidelity_rows(stats, budget)
    worst_amp, worst_phase = worst_case(infidelity_from_stats(s) for s in stats)
    logger.info("fidelity_report", channels=len(rows), worst_amp=worst_amp, worst_phase=worst_phase,
                over_budget=sum(row.over_budget for row in rows))
    if out is not None:
        write_frame(infidelity_frame(rows), ensure_dir(out) / INFIDELITY_FILE)
    print(render_report(rows, budget))
    return rows


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("fidelity", help="Infidelity report from a stats CSV")
    parser.add_argument("stats_csv", type=Path, help="stats.csv of a run")
    parser.add_argument("--budget", type=float, default=None, help="Per-channel infidelity budget")
    parser.add_argument("--out", type=Path, default=None, help="Directory for infidelity.csv")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    cmd_fidelity(args.stats_csv, budget=args.budget, out=args.out)
    return 0
