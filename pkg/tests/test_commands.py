"""
Integration tests for the command-line surface.

Campaigns are shortened to 130 s (100 rounds).
"""

import pandas as pd
import pytest

from src.commands.calibrate import cmd_calibrate
from src.commands.clock_skew import cmd_clock_skew
from src.commands.compare import cmd_compare
from src.commands.fidelity import cmd_fidelity
from src.commands.run import cmd_run
from src.config import settings
from src.constants import (
    CALIBRATED_SCENARIO_FILE,
    CALIBRATION_REPORT_FILE,
    CAMPAIGN_FILE,
    COMPARISON_FILE,
    COMPARISON_SUMMARY_FILE,
    DISCIPLINE_TRACE_FILE,
    INFIDELITY_FILE,
    MERGED_SERIES_FILE,
    RUN_STATUS_COMPLETE,
    RUN_STATUS_FAILED,
    SKEW_REPORT_FILE,
    STATS_FILE,
    SUMMARY_FILE,
    THERMAL_TRACE_FILE,
    VERIFY_STATS_FILE,
)
from src.exceptions import ConfigurationError
from src.main import main
from src.services.scenario_loader import load_scenario
from src.storage import read_manifest, write_manifest

from tests.conftest import DEFAULT_SCENARIO, SHORT_DURATION

pytestmark = pytest.mark.integration


@pytest.fixture(scope="module")
def run_pair(tmp_path_factory):
    """Control-on and control-off runs of the short scenario with seed 7."""
    base = tmp_path_factory.mktemp("pair")
    on = cmd_run(DEFAULT_SCENARIO, control="on", seed=7, duration=SHORT_DURATION, out=base / "on")
    off = cmd_run(DEFAULT_SCENARIO, control="off", seed=7, duration=SHORT_DURATION, out=base / "off")
    return on, off


class TestRunCommand:
    """Test cases for `run`."""

    def test_outputs(self, run_pair):
        """Test a run directory holds every table and a complete manifest."""
        on, _ = run_pair
        manifest = read_manifest(on)
        assert manifest.status == RUN_STATUS_COMPLETE
        assert manifest.seed == 7
        assert manifest.control_mode == "on"
        for name in (CAMPAIGN_FILE, STATS_FILE, SUMMARY_FILE, INFIDELITY_FILE, THERMAL_TRACE_FILE):
            assert name in manifest.outputs
            assert (on / name).exists()
        assert len(pd.read_csv(on / STATS_FILE)) == 15
        assert len(pd.read_csv(on / CAMPAIGN_FILE)) == 1500

    def test_reproducible(self, run_pair, tmp_path):
        """Test the same scenario and seed give byte-identical tables."""
        on, _ = run_pair
        again = cmd_run(DEFAULT_SCENARIO, control="on", seed=7, duration=SHORT_DURATION, out=tmp_path / "again")
        for name in (CAMPAIGN_FILE, STATS_FILE, INFIDELITY_FILE):
            assert (again / name).read_bytes() == (on / name).read_bytes()

    def test_default_run_dir(self, isolated_output_dir):
        """Test runs land under the output dir named by scenario, control and seed."""
        run_dir = cmd_run(DEFAULT_SCENARIO, control="off", seed=3, duration=SHORT_DURATION)
        assert run_dir == isolated_output_dir / "default_off_seed3"
        assert read_manifest(run_dir).status == RUN_STATUS_COMPLETE

    def test_dump_guard_marks_failed(self, tmp_path, monkeypatch):
        """Test a refused envelope dump leaves a failed manifest."""
        monkeypatch.setattr(settings, "envelope_dump_max_rows", 10)
        with pytest.raises(ConfigurationError):
            cmd_run(DEFAULT_SCENARIO, seed=1, duration=SHORT_DURATION, out=tmp_path / "run", dump_envelopes=True)
        assert read_manifest(tmp_path / "run").status == RUN_STATUS_FAILED

    def test_invalid_seed(self, tmp_path):
        """Test seeds outside the unsigned 64-bit range are rejected."""
        with pytest.raises(ConfigurationError):
            cmd_run(DEFAULT_SCENARIO, seed=2 ** 64, duration=SHORT_DURATION, out=tmp_path / "run")


class TestCompareCommand:
    """Test cases for `compare`."""

    def test_on_vs_off(self, run_pair, tmp_path, capsys):
        """Test the comparison files and labels."""
        on, off = run_pair
        comparison = cmd_compare(on, off, out=tmp_path / "cmp")
        assert len(comparison.table) == 15
        for name in (COMPARISON_FILE, COMPARISON_SUMMARY_FILE, MERGED_SERIES_FILE):
            assert (tmp_path / "cmp" / name).exists()
        assert "off/on" in capsys.readouterr().out
        merged = pd.read_csv(tmp_path / "cmp" / MERGED_SERIES_FILE)
        assert set(merged["run"]) == {"on", "off"}

    def test_self_comparison(self, run_pair, tmp_path):
        """Test a run compared with itself has unit ratios."""
        on, _ = run_pair
        comparison = cmd_compare(on, on, out=tmp_path / "self")
        assert all(value == pytest.approx(1.0) for value in comparison.mean_ratios.values())

    def test_scenario_mismatch(self, run_pair, tmp_path):
        """Test runs of different scenarios cannot be compared."""
        on, off = run_pair
        other = tmp_path / "other"
        other.mkdir()
        (other / STATS_FILE).write_bytes((off / STATS_FILE).read_bytes())
        manifest = read_manifest(off)
        write_manifest(manifest.model_copy(update={"scenario_hash": "f" * 64}), other)
        with pytest.raises(ConfigurationError, match="different scenario"):
            cmd_compare(on, other, out=tmp_path / "cmp")


class TestFidelityCommand:
    """Test cases for `fidelity`."""

    def test_report(self, run_pair, tmp_path, capsys):
        """Test one row per channel and the budget flag."""
        on, _ = run_pair
        rows = cmd_fidelity(on / STATS_FILE, budget=0.0, out=tmp_path / "fid")
        assert len(rows) == 15
        assert all(row.over_budget for row in rows if max(row.amp_infidelity, row.phase_infidelity) > 0)
        assert (tmp_path / "fid" / INFIDELITY_FILE).exists()
        assert "Worst case" in capsys.readouterr().out

    def test_generous_budget(self, run_pair):
        """Test a budget of 1 flags nothing."""
        on, _ = run_pair
        assert not any(row.over_budget for row in cmd_fidelity(on / STATS_FILE, budget=1.0))


class TestClockSkewCommand:
    """Test cases for `clock-skew`."""

    def test_default_report(self, tmp_path):
        """Test a day of the default offsets ends eight ticks apart."""
        skew = cmd_clock_skew(DEFAULT_SCENARIO, out=tmp_path / "clock")
        assert skew.iloc[0].tolist() == [0.0, 0]
        assert skew.iloc[-1]["t_s"] == 86400.0
        assert skew.iloc[-1]["max_skew_ticks"] == 8
        assert skew["max_skew_ticks"].is_monotonic_increasing
        trace = pd.read_csv(tmp_path / "clock" / DISCIPLINE_TRACE_FILE)
        assert len(trace) == 101
        assert abs(trace["residual_offset"].iloc[-1]) < 1e-12
        assert (tmp_path / "clock" / SKEW_REPORT_FILE).exists()


class TestCalibrateCommand:
    """Test cases for `calibrate`."""

    def test_calibrate_and_verify(self, tmp_path):
        """Test the calibrated scenario is written, valid and verified."""
        out = tmp_path / "cal"
        result = cmd_calibrate(DEFAULT_SCENARIO, seed=2, duration=SHORT_DURATION, out=out, verify=True)
        assert result.amp_scale >= 0.0 and result.phase_scale >= 0.0
        for name in (CALIBRATION_REPORT_FILE, CALIBRATED_SCENARIO_FILE, VERIFY_STATS_FILE, SUMMARY_FILE):
            assert (out / name).exists()
        calibrated = load_scenario(out / CALIBRATED_SCENARIO_FILE)
        coefficients = {s.device_id: s.amp_coeff for s in calibrated.sensitivities}
        assert coefficients == pytest.approx({k: v.amp_coeff for k, v in result.sensitivities.items()})
        assert read_manifest(out).command == "calibrate"


class TestMain:
    """Test cases for the entry point and exit codes."""

    def test_success(self, isolated_output_dir):
        """Test a valid run exits 0."""
        assert main(["run", "--control", "off", "--seed", "4", "--duration", "130", "--label", "cli"]) == 0
        assert (isolated_output_dir / "cli" / STATS_FILE).exists()

    def test_usage_error(self):
        """Test an invalid option value exits 2."""
        with pytest.raises(SystemExit) as excinfo:
            main(["run", "--control", "sideways"])
        assert excinfo.value.code == 2

    def test_missing_command(self):
        """Test a subcommand is required."""
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == 2

    def test_domain_error(self, tmp_path, capsys):
        """Test a malformed stats file exits 1 with the row number."""
        path = tmp_path / "stats.csv"
        path.write_text("unit,channel,amp_p2p,amp_std,phase_p2p,phase_std\n0,0,x,0.1,3,0.4\n", encoding="utf-8")
        assert main(["fidelity", str(path)]) == 1
        assert "row 2" in capsys.readouterr().err

    def test_scenario_diagnostics(self, tmp_path, capsys):
        """Test every scenario error is printed."""
        path = tmp_path / "bad.yaml"
        text = DEFAULT_SCENARIO.read_text(encoding="utf-8").replace("u0.amp0, u0.pll_dac0", "u0.nope, u0.pll_dac0", 1)
        path.write_text(text, encoding="utf-8")
        assert main(["run", "--scenario", str(path), "--duration", "130"]) == 1
        assert "'u0.nope'" in capsys.readouterr().err
