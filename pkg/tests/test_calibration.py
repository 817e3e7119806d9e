"""
Tests for sensitivity calibration.
"""

import numpy as np
import pytest

from src.constants import CONTROL_ON
from src.exceptions import CalibrationError
from src.services.calibration import (
    CalibrationTargets,
    _solve_scale,
    calibrate_sensitivities,
    noise_free_stats,
    scale_sensitivities,
)
from src.services.schedule_capture import simulate_thermal


@pytest.fixture(scope="module")
def history(short_setup):
    return simulate_thermal(short_setup, CONTROL_ON, np.random.default_rng(5), short_setup.plan.n_rounds)


class TestSolveScale:
    """Test cases for the bracketing bisection."""

    def test_quadratic_root(self):
        """Test the positive root of s^2 - 4."""
        assert _solve_scale(lambda s: s * s - 4.0, "test", 100) == pytest.approx(2.0, abs=1e-7)

    def test_zero_target(self):
        """Test an objective already met at zero returns zero."""
        assert _solve_scale(lambda s: s, "test", 100) == 0.0

    def test_unreachable_target(self):
        """Test an objective that never turns positive raises with a residual."""
        with pytest.raises(CalibrationError) as excinfo:
            _solve_scale(lambda s: -1.0, "test", 100)
        assert excinfo.value.residual == -1.0


class TestCalibrate:
    """Test cases for calibration against a fixed temperature history."""

    def test_self_consistent(self, short_setup, history):
        """Test targets taken from the seed coefficients give unit scales."""
        base = short_setup.sensitivities
        amp_stats = noise_free_stats(short_setup, history, scale_sensitivities(base, 1.0, 0.0))
        phase_stats = noise_free_stats(short_setup, history, scale_sensitivities(base, 0.0, 1.0))
        targets = CalibrationTargets(
            amp_std_pct=float(np.mean([s.amp_std_pct for s in amp_stats])),
            phase_std_deg=float(np.mean([s.phase_std_deg for s in phase_stats])),
        )
        result = calibrate_sensitivities(short_setup, targets, history=history)
        assert result.amp_scale == pytest.approx(1.0, rel=1e-6)
        assert result.phase_scale == pytest.approx(1.0, rel=1e-6)
        assert result.achieved_amp_std_pct == pytest.approx(targets.amp_std_pct, rel=1e-5)
        assert result.achieved_phase_std_deg == pytest.approx(targets.phase_std_deg, rel=1e-5)

    def test_scaled_coefficients(self, short_setup, history):
        """Test every coefficient is scaled by the same factor."""
        targets = CalibrationTargets(amp_std_pct=0.05, phase_std_deg=0.1)
        result = calibrate_sensitivities(short_setup, targets, history=history)
        for device_id, seed in short_setup.sensitivities.items():
            calibrated = result.sensitivities[device_id]
            assert calibrated.amp_coeff == pytest.approx(seed.amp_coeff * result.amp_scale)
            assert calibrated.phase_coeff == pytest.approx(seed.phase_coeff * result.phase_scale)
        assert [s.device_id for s in result.coefficients()] == sorted(short_setup.sensitivities)

    def test_zero_targets(self, short_setup, history):
        """Test zero targets switch coupling off."""
        result = calibrate_sensitivities(short_setup, CalibrationTargets(0.0, 0.0), history=history)
        assert result.amp_scale == 0.0
        assert result.phase_scale == 0.0

    def test_phase_std_linear_in_coefficients(self, short_setup, history):
        """Test doubling every phase coefficient doubles the phase std."""
        base = short_setup.sensitivities
        single = noise_free_stats(short_setup, history, scale_sensitivities(base, 1.0, 1.0))
        double = noise_free_stats(short_setup, history, scale_sensitivities(base, 1.0, 2.0))
        ratio = np.mean([s.phase_std_deg for s in double]) / np.mean([s.phase_std_deg for s in single])
        assert ratio == pytest.approx(2.0, rel=0.05)
