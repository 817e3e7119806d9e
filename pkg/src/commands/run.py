"""
`run` subcommand: one stability campaign and its run directory.
"""

import argparse
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from src.config import settings
from src.constants import (
    CAMPAIGN_FILE,
    CONTROL_MODES,
    CONTROL_ON,
    ENVELOPE_FILE,
    INFIDELITY_FILE,
    PLOT_SERIES_FILE,
    SOFTWARE_VERSION,
    STATS_FILE,
    STATS_TABLE_FILE,
    SUMMARY_FILE,
    THERMAL_TRACE_FILE,
)
from src.commands.fidelity import infidelity_frame, infidelity_rows
from src.exceptions import ConfigurationError
from src.models.schemas import RunManifest, Scenario
from src.services.analysis import compute_stats, plot_frame, render_table, summarize
from src.services.scenario_loader import build_campaign_setup, load_scenario, scenario_hash
from src.services.schedule_capture import CampaignResult, run_campaign
from src.storage import (
    EnvelopeDumpWriter,
    RunRecorder,
    campaign_frame,
    thermal_trace_frame,
    write_frame,
    write_stats_csv,
    write_text,
)
from src.utils.logging import get_logger, run_context

logger = get_logger("commands.run")


def default_run_dir(scenario: Scenario, control: str, seed: int, label: Optional[str] = None) -> Path:
    base = Path(scenario.output_dir or settings.output_dir)
    return base / (label or f"{scenario.name}_{control}_seed{seed}")


def write_run_outputs(recorder: RunRecorder, result: CampaignResult, budget: float) -> None:
    stats = [compute_stats(series) for series in result.series]
    write_frame(campaign_frame(result), recorder.path(CAMPAIGN_FILE))
    write_stats_csv(stats, recorder.path(STATS_FILE))
    write_text(render_table(stats), recorder.path(STATS_TABLE_FILE))
    summary = summarize(stats)
    write_text(f"control {result.control}, {result.n_rounds} rounds\n{summary.summary_line()}", recorder.path(SUMMARY_FILE))
    write_frame(infidelity_frame(infidelity_rows(stats, budget, result.series)), recorder.path(INFIDELITY_FILE))
    write_frame(thermal_trace_frame(result), recorder.path(THERMAL_TRACE_FILE))
    write_frame(plot_frame(result.series), recorder.path(PLOT_SERIES_FILE))
    print(summary.summary_line())


def cmd_run(
    scenario_path: Path,
    control: str = CONTROL_ON,
    seed: Optional[int] = None,
    duration: Optional[float] = None,
    out: Optional[Path] = None,
    dump_envelopes: bool = False,
    force_dump: bool = False,
    label: Optional[str] = None,
) -> Path:
    """
    Run one campaign and write its run directory.

    Args:
        scenario_path: Scenario YAML
        control: "on" or "off"
        seed: Root seed; the scenario's seed if None
        duration: Shortened campaign length, s
        out: Run directory; derived from the output dir, name, control and seed if None
        dump_envelopes: Also write every captured window to envelopes.csv
        force_dump: Allow dumps above settings.envelope_dump_max_rows
        label: Run directory name under the output dir

    Returns:
        The run directory

    Raises:
        SimulatorError: Any scenario or campaign failure; the manifest is marked failed
    """
    scenario = load_scenario(scenario_path, duration=duration)
    seed = scenario.seed if seed is None else seed
    if not 0 <= seed < 2 ** 64:
        raise ConfigurationError(f"--seed must be an unsigned 64-bit integer, got {seed}")
    run_dir = out or default_run_dir(scenario, control, seed, label)
    manifest = RunManifest(
        scenario_name=scenario.name,
        scenario_hash=scenario_hash(scenario),
        seed=seed,
        control_mode=control,
        software_version=SOFTWARE_VERSION,
        command="run",
        total_duration=scenario.measurement.total_duration,
        started_at=datetime.now(timezone.utc),
        status="",
    )
    with (
        run_context(scenario=scenario.name, seed=seed, control=control),
        RunRecorder(run_dir, manifest) as recorder,
    ):
        setup = build_campaign_setup(scenario)
        sink = None
        if dump_envelopes:
            plan = setup.plan
            sink = EnvelopeDumpWriter(
                recorder.path(ENVELOPE_FILE),
                expected_rows=plan.n_rounds * len(setup.channels) * plan.pulse_samples,
                max_rows=settings.envelope_dump_max_rows,
                force=force_dump,
            )
        try:
            result = run_campaign(setup, control=control, seed=seed, envelope_sink=sink)
        finally:
            if sink is not None:
                sink.close()
        write_run_outputs(recorder, result, settings.fidelity_budget)
    logger.info("run_complete", run_dir=str(run_dir), control=control, seed=seed)
    return Path(run_dir)


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("run", help="Run one stability campaign")
    parser.add_argument("--scenario", type=Path, default=None, help="Scenario YAML")
    parser.add_argument("--control", choices=CONTROL_MODES, default=CONTROL_ON, help="Thermal control mode")
    parser.add_argument("--seed", type=int, default=None, help="Root seed (default: scenario seed)")
    parser.add_argument("--duration", type=float, default=None, help="Campaign length override, s")
    parser.add_argument("--out", type=Path, default=None, help="Run directory")
    parser.add_argument("--label", default=None, help="Run directory name under the output dir")
    parser.add_argument("--dump-envelopes", action="store_true", help="Write captured windows to envelopes.csv")
    parser.add_argument("--force-dump", action="store_true", help="Allow very large envelope dumps")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    cmd_run(
        args.scenario or Path(settings.default_scenario),
        control=args.control,
        seed=args.seed,
        duration=args.duration,
        out=args.out,
        dump_envelopes=args.dump_envelopes,
        force_dump=args.force_dump,
        label=args.label,
    )
    return 0
