"""
`clock-skew` subcommand: counter skew and OCXO discipline reports.
"""

import argparse
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from src.config import settings
from src.constants import (
    CONTROL_ON,
    DISCIPLINE_TRACE_FILE,
    REFERENCE_CLOCK_HZ,
    SKEW_REPORT_FILE,
    SOFTWARE_VERSION,
    SUMMARY_FILE,
)
from src.models.schemas import ClockConfig, RunManifest
from src.services.clocktree import (
    ClockNode,
    DistributorConfig,
    DistributorKind,
    GlobalCounter,
    derive_clocks,
    discipline,
    distribute,
    skew_series,
)
from src.services.scenario_loader import load_scenario, scenario_hash
from src.storage import RunRecorder, write_frame, write_text
from src.utils.logging import get_logger

logger = get_logger("commands.clock_skew")


def report_times(total_duration: float, interval: float) -> np.ndarray:
    """0, interval, 2*interval, ... and always the end of the campaign."""
    times = np.arange(0.0, total_duration, interval)
    return np.append(times, total_duration)


def skew_frame(clock: ClockConfig, total_duration: float) -> pd.DataFrame:
    epochs = clock.reset_epochs or [0.0] * len(clock.unit_offsets)
    counters = [GlobalCounter(unit_id=u, reset_epoch=epoch) for u, epoch in enumerate(epochs)]
    offsets = {u: offset for u, offset in enumerate(clock.unit_offsets)}
    rows = skew_series(counters, offsets, report_times(total_duration, clock.report_interval))
    return pd.DataFrame(rows, columns=["t_s", "max_skew_ticks"])


def discipline_frame(clock: ClockConfig) -> pd.DataFrame:
    residuals = discipline(clock.ocxo_initial_offset, clock.compensator_gain,
                           clock.discipline_iterations, clock.compensator_resolution)
    iterations = np.arange(len(residuals))
    return pd.DataFrame({
        "iteration": iterations,
        "t_s": iterations * clock.discipline_interval,
        "residual_offset": residuals,
    })


def distribution_summary(clock: ClockConfig) -> str:
    reference = ClockNode("ref10M", REFERENCE_CLOCK_HZ, clock.reference_offset)
    clocks = derive_clocks(reference)
    lines = []
    feed = clocks
    for kind in clock.distributors:
        outputs = distribute(DistributorConfig(kind=DistributorKind(kind)), feed)
        lines.append(f"{kind} distributor: {len(outputs)} outputs")
        feed = outputs[:len(clocks)]
    c100, c250, c62k5 = clocks
    lines.append(
        f"derived clocks at offset {clock.reference_offset:g}: "
        f"{float(c100.frequency):.6f} Hz, {float(c250.frequency):.6f} Hz, {float(c62k5.frequency):.9f} Hz "
        f"(ratio 250M/62.5k = {c250.frequency / c62k5.frequency})"
    )
    return "\n".join(lines)


def cmd_clock_skew(scenario_path: Path, duration: Optional[float] = None, out: Optional[Path] = None) -> pd.DataFrame:
    """Write the skew report and the discipline trace of a scenario's clock block."""
    scenario = load_scenario(scenario_path, duration=duration)
    clock = scenario.clock
    total = scenario.measurement.total_duration
    out_dir = out or Path(scenario.output_dir or settings.output_dir) / f"{scenario.name}_clock"
    manifest = RunManifest(
        scenario_name=scenario.name,
        scenario_hash=scenario_hash(scenario),
        seed=scenario.seed,
        control_mode=CONTROL_ON,
        software_version=SOFTWARE_VERSION,
        command="clock-skew",
        total_duration=total,
        started_at=datetime.now(timezone.utc),
        status="",
    )
    with RunRecorder(out_dir, manifest) as recorder:
        skew = skew_frame(clock, total)
        write_frame(skew, recorder.path(SKEW_REPORT_FILE))
        trace = discipline_frame(clock)
        write_frame(trace, recorder.path(DISCIPLINE_TRACE_FILE))
        summary = "\n".join([
            distribution_summary(clock),
            f"max counter skew over {total:g} s: {int(skew['max_skew_ticks'].max())} ticks",
            f"OCXO residual after {clock.discipline_iterations} steps: {trace['residual_offset'].iloc[-1]:.3e}",
        ])
        write_text(summary, recorder.path(SUMMARY_FILE))
    logger.info("clock_report_written", out=str(out_dir), max_skew=int(skew["max_skew_ticks"].max()))
    print(summary)
    return skew


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("clock-skew", help="Counter skew and OCXO discipline report")
    parser.add_argument("--scenario", type=Path, default=None, help="Scenario YAML")
    parser.add_argument("--duration", type=float, default=None, help="Report span override, s")
    parser.add_argument("--out", type=Path, default=None, help="Output directory")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    cmd_clock_skew(args.scenario or Path(settings.default_scenario), duration=args.duration, out=args.out)
    return 0
