"""
Full-length campaign checks against the measured stability of the hardware.

Each campaign covers 24 h of measurement rounds; run with `-m slow`.
"""

import pytest

from src.constants import (
    CALIBRATION_TARGET_AMP_STD_PCT,
    REFERENCE_OFF_AMP_STD_MEAN_PCT,
    REFERENCE_OFF_PHASE_STD_MEAN_DEG,
)
from src.services.analysis import compare_stats, compute_stats
from src.services.scenario_loader import build_campaign_setup, load_scenario
from src.services.schedule_capture import run_campaign

from tests.conftest import DEFAULT_SCENARIO

pytestmark = pytest.mark.slow

SEED = 20240601


@pytest.fixture(scope="module")
def full_setup():
    return build_campaign_setup(load_scenario(DEFAULT_SCENARIO))


@pytest.fixture(scope="module")
def stats_on(full_setup):
    result = run_campaign(full_setup, control="on", seed=SEED)
    return [compute_stats(series) for series in result.series]


@pytest.fixture(scope="module")
def stats_off(full_setup):
    result = run_campaign(full_setup, control="off", seed=SEED)
    return [compute_stats(series) for series in result.series]


class TestControlledStability:
    """Test the day-long stability with thermal control."""

    def test_round_count(self, full_setup):
        """Test a day holds 66461 rounds."""
        assert full_setup.plan.n_rounds == 66461

    def test_amplitude_std_range(self, stats_on):
        """Test every channel's amplitude std lies in [0.05, 0.30]%."""
        for stats in stats_on:
            assert 0.05 <= stats.amp_std_pct <= 0.30, stats.channel_id

    def test_phase_std_range(self, stats_on):
        """Test every channel's phase std lies in [0.25, 0.55] degrees."""
        for stats in stats_on:
            assert 0.25 <= stats.phase_std_deg <= 0.55, stats.channel_id

    def test_p2p_exceeds_std(self, stats_on):
        """Test peak-to-peak bounds the deviation on every channel."""
        assert all(s.amp_p2p_pct >= s.amp_std_pct for s in stats_on)
        assert all(s.phase_p2p_deg >= s.phase_std_deg for s in stats_on)


class TestControlBenefit:
    """Test the stability lost without thermal control."""

    def test_more_than_doubled(self, stats_on, stats_off):
        """Test amplitude and phase std at least double with control off."""
        comparison = compare_stats(stats_on, stats_off)
        assert comparison.mean_ratios["amp_std"] >= 2.0
        assert comparison.mean_ratios["phase_std"] >= 2.0
        assert comparison.more_than_doubled()

    def test_amplitude_ratio_near_measured(self, stats_on, stats_off):
        """Test the mean amplitude std ratio is within 40% of the measured off/on ratio."""
        expected = REFERENCE_OFF_AMP_STD_MEAN_PCT / CALIBRATION_TARGET_AMP_STD_PCT
        comparison = compare_stats(stats_on, stats_off)
        assert comparison.mean_ratios["amp_std"] == pytest.approx(expected, rel=0.4)

    def test_uncontrolled_std_near_measured(self, stats_off):
        """Test the control-off mean std values land near the measured ones."""
        amp = sum(s.amp_std_pct for s in stats_off) / len(stats_off)
        phase = sum(s.phase_std_deg for s in stats_off) / len(stats_off)
        assert amp == pytest.approx(REFERENCE_OFF_AMP_STD_MEAN_PCT, rel=0.4)
        assert phase == pytest.approx(REFERENCE_OFF_PHASE_STD_MEAN_DEG, rel=0.5)
