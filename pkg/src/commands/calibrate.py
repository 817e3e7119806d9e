"""
`calibrate` subcommand: fit the sensitivity scales to the target std devs.
"""

import argparse
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import pandas as pd

from src.config import settings
from src.constants import (
    CALIBRATED_SCENARIO_FILE,
    CALIBRATION_REPORT_FILE,
    CONTROL_ON,
    SOFTWARE_VERSION,
    SUMMARY_FILE,
    VERIFY_STATS_FILE,
)
from src.models.schemas import CalibrationRow, RunManifest
from src.services.analysis import compute_stats, summarize
from src.services.calibration import CalibrationResult, CalibrationTargets, calibrate_sensitivities
from src.services.scenario_loader import (
    build_campaign_setup,
    dump_scenario,
    load_scenario,
    scenario_hash,
    with_sensitivities,
)
from src.services.schedule_capture import run_campaign
from src.storage import RunRecorder, write_frame, write_stats_csv, write_text
from src.utils.logging import get_logger

logger = get_logger("commands.calibrate")


def calibration_frame(result: CalibrationResult) -> pd.DataFrame:
    rows = [
        CalibrationRow(device_id=s.device_id, amp_coeff=s.amp_coeff, phase_coeff=s.phase_coeff).model_dump()
        for s in result.coefficients()
    ]
    return pd.DataFrame(rows, columns=list(CalibrationRow.model_fields))


def cmd_calibrate(
    scenario_path: Path,
    seed: Optional[int] = None,
    duration: Optional[float] = None,
    out: Optional[Path] = None,
    verify: bool = False,
    targets: CalibrationTargets = CalibrationTargets(),
) -> CalibrationResult:
    """
    Calibrate the scenario's coefficients and write the calibrated scenario.

    Args:
        scenario_path: Scenario whose coefficients seed the search
        seed: Root seed of the thermal history; the scenario's seed if None
        duration: Shortened campaign length, s
        out: Output directory
        verify: Run one full control-on campaign with the calibrated coefficients

    Returns:
        CalibrationResult

    Raises:
        CalibrationError: The search did not converge
    """
    scenario = load_scenario(scenario_path, duration=duration)
    seed = scenario.seed if seed is None else seed
    out_dir = out or Path(scenario.output_dir or settings.output_dir) / f"{scenario.name}_calibration_seed{seed}"
    manifest = RunManifest(
        scenario_name=scenario.name,
        scenario_hash=scenario_hash(scenario),
        seed=seed,
        control_mode=CONTROL_ON,
        software_version=SOFTWARE_VERSION,
        command="calibrate",
        total_duration=scenario.measurement.total_duration,
        started_at=datetime.now(timezone.utc),
        status="",
    )
    with RunRecorder(out_dir, manifest) as recorder:
        result = calibrate_sensitivities(build_campaign_setup(scenario), targets=targets, seed=seed)
        write_frame(calibration_frame(result), recorder.path(CALIBRATION_REPORT_FILE))
        calibrated = with_sensitivities(scenario, result.sensitivities)
        dump_scenario(calibrated, recorder.path(CALIBRATED_SCENARIO_FILE))

        lines = [
            f"amplitude scale {result.amp_scale:.6g}: mean amp std {result.achieved_amp_std_pct:.4f}% "
            f"(target {targets.amp_std_pct:.4f}%)",
            f"phase scale {result.phase_scale:.6g}: mean phase std {result.achieved_phase_std_deg:.4f} deg "
            f"(target {targets.phase_std_deg:.4f} deg)",
        ]
        if verify:
            campaign = run_campaign(build_campaign_setup(calibrated), control=CONTROL_ON, seed=seed)
            stats = [compute_stats(series) for series in campaign.series]
            write_stats_csv(stats, recorder.path(VERIFY_STATS_FILE))
            lines.append(f"verification campaign: {summarize(stats).summary_line()}")
        write_text("\n".join(lines), recorder.path(SUMMARY_FILE))
    print("\n".join(lines))
    return result


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("calibrate", help="Fit sensitivity coefficients to the target stability")
    parser.add_argument("--scenario", type=Path, default=None, help="Scenario YAML")
    parser.add_argument("--seed", type=int, default=None, help="Root seed (default: scenario seed)")
    parser.add_argument("--duration", type=float, default=None, help="Campaign length override, s")
    parser.add_argument("--out", type=Path, default=None, help="Output directory")
    parser.add_argument("--verify", action="store_true", help="Check the result with one full campaign")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    cmd_calibrate(
        args.scenario or Path(settings.default_scenario),
        seed=args.seed,
        duration=args.duration,
        out=args.out,
        verify=args.verify,
    )
    return 0
