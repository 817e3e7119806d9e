"""
Tests for gate infidelity under coherent amplitude and phase errors.
"""

import math

import numpy as np
import pytest

from src.exceptions import ConfigurationError, UnitaryError
from src.services.analysis import ChannelSeries, StabilityStats
from src.services.fidelity import (
    SingleQubitUnitary,
    amp_error_infidelity,
    avg_fidelity,
    infidelity_from_stats,
    phase_error_infidelity,
    series_infidelity,
    worst_case,
    x_rotation,
    xy_axis_rotation,
)
from src.services.rfchain import ChannelId


class TestHeadlineNumbers:
    """Test the infidelities of the worst measured channel."""

    def test_amplitude_error(self):
        """Test 0.22% amplitude error gives about 2e-6."""
        result = amp_error_infidelity(0.0022)
        assert 1.9e-6 <= result.exact <= 2.1e-6

    def test_phase_error(self):
        """Test 0.44 degree phase error gives about 2e-5."""
        result = phase_error_infidelity(7.67e-3)
        assert 1.9e-5 <= result.exact <= 2.1e-5

    def test_quarter_turn_axis_error(self):
        """Test a pi/2 axis tilt gives infidelity 1/2."""
        assert phase_error_infidelity(math.pi / 2).exact == pytest.approx(0.5, abs=1e-15)

    def test_from_stats(self):
        """Test std devs in percent and degrees are converted before use."""
        stats = StabilityStats(ChannelId(0, 3), 1.1, 0.22, 2.7, 0.44)
        amp, phase = infidelity_from_stats(stats)
        assert amp.exact == pytest.approx(amp_error_infidelity(0.0022).exact)
        assert phase.exact == pytest.approx(phase_error_infidelity(math.radians(0.44)).exact)


class TestMatrixOracle:
    """Test closed forms against explicit unitaries."""

    def test_amplitude_closed_form(self, rng):
        """Test over-rotation infidelity against the matrix fidelity."""
        ideal = x_rotation(math.pi / 2)
        for epsilon in rng.uniform(-0.5, 0.5, 1000):
            actual = x_rotation(math.pi / 2 * (1 + epsilon))
            expected = 1.0 - avg_fidelity(ideal, actual)
            assert amp_error_infidelity(epsilon).exact == pytest.approx(expected, abs=1e-12)

    def test_phase_closed_form(self, rng):
        """Test axis-tilt infidelity against the matrix fidelity."""
        ideal = x_rotation(math.pi / 2)
        for phi in rng.uniform(-math.pi, math.pi, 1000):
            actual = xy_axis_rotation(math.pi / 2, phi)
            expected = 1.0 - avg_fidelity(ideal, actual)
            assert phase_error_infidelity(phi).exact == pytest.approx(expected, abs=1e-12)

    def test_identical_gates(self):
        """Test a gate has unit fidelity with itself."""
        gate = xy_axis_rotation(math.pi / 2, 0.3)
        assert avg_fidelity(gate, gate) == pytest.approx(1.0, abs=1e-15)


class TestApproximation:
    """Test the small-angle forms."""

    @pytest.mark.parametrize("delta", [1e-4, 1e-3, 1e-2, 0.1, 0.3])
    def test_amplitude_bound(self, delta):
        """Test the quadratic form stays within a quartic bound."""
        epsilon = delta / (math.pi / 2)
        result = amp_error_infidelity(epsilon)
        assert result.small_angle == pytest.approx(delta ** 2 / 6)
        assert abs(result.exact - result.small_angle) <= delta ** 4 / 30

    @pytest.mark.parametrize("phi", [1e-4, 1e-3, 1e-2, 0.1, 0.3])
    def test_phase_bound(self, phi):
        """Test the quadratic form stays within a quartic bound."""
        result = phase_error_infidelity(phi)
        assert result.small_angle == pytest.approx(phi ** 2 / 3)
        assert abs(result.exact - result.small_angle) <= phi ** 4 / 12

    @pytest.mark.parametrize("phi", [1e-4, 1e-5, 1e-6])
    def test_phase_exact_keeps_digits_at_tiny_angles(self, phi):
        """Test the exact phase infidelity keeps full precision near zero."""
        half = phi / 2
        reference = (2 / 3) * math.sin(half) ** 2 * (1 + math.cos(half) ** 2)
        assert phase_error_infidelity(phi).exact == pytest.approx(reference, rel=1e-12)
        assert phase_error_infidelity(phi).exact == pytest.approx(phi ** 2 / 3, rel=1e-6)

    def test_symmetric_and_bounded(self, rng):
        """Test errors of either sign cost the same and stay in [0, 2/3]."""
        for value in rng.uniform(-3.0, 3.0, 200):
            amp = amp_error_infidelity(value).exact
            phase = phase_error_infidelity(value).exact
            assert amp == pytest.approx(amp_error_infidelity(-value).exact, abs=1e-15)
            assert phase == pytest.approx(phase_error_infidelity(-value).exact, abs=1e-15)
            assert 0.0 <= amp <= 2.0 / 3.0 + 1e-15
            assert 0.0 <= phase <= 2.0 / 3.0 + 1e-15

    def test_zero_error(self):
        """Test zero error gives zero infidelity."""
        assert amp_error_infidelity(0.0).exact == 0.0
        assert phase_error_infidelity(0.0).exact == 0.0

    def test_non_finite_error(self):
        """Test NaN errors are rejected."""
        with pytest.raises(ConfigurationError):
            amp_error_infidelity(float("nan"))
        with pytest.raises(ConfigurationError):
            phase_error_infidelity(float("inf"))


class TestUnitary:
    """Test unitary validation."""

    def test_non_unitary(self):
        """Test a scaling matrix is rejected."""
        with pytest.raises(UnitaryError):
            SingleQubitUnitary(np.diag([1.0, 2.0]))

    def test_wrong_shape(self):
        """Test a 3x3 identity is rejected."""
        with pytest.raises(UnitaryError):
            SingleQubitUnitary(np.eye(3))

    def test_rotations_are_unitary(self):
        """Test constructed rotations pass validation."""
        gate = xy_axis_rotation(1.234, -0.7)
        np.testing.assert_allclose(gate.dagger() @ gate.matrix, np.eye(2), atol=1e-12)


class TestSeries:
    """Test per-pulse averaged infidelity."""

    def test_constant_series(self):
        """Test a perfectly stable series has zero infidelity."""
        series = ChannelSeries(ChannelId(0, 0), np.arange(5.0), np.full(5, 0.8), np.full(5, 12.0))
        assert series_infidelity(series) == (0.0, 0.0)

    def test_matches_small_angle_of_std(self, rng):
        """Test the averaged infidelity tracks the std-based estimate."""
        n = 20000
        amplitudes = 1.0 + 0.002 * rng.standard_normal(n)
        phases = 0.4 * rng.standard_normal(n)
        series = ChannelSeries(ChannelId(0, 0), np.arange(float(n)), amplitudes, phases)
        amp, phase = series_infidelity(series)
        eps_std = np.std(amplitudes / amplitudes.mean())
        phi_std = math.radians(np.std(phases))
        assert amp == pytest.approx((math.pi / 2 * eps_std) ** 2 / 6, rel=1e-3)
        assert phase == pytest.approx(phi_std ** 2 / 3, rel=1e-3)

    def test_worst_case(self):
        """Test the worst channel is reported for each error kind."""
        results = [
            (amp_error_infidelity(0.001), phase_error_infidelity(0.01)),
            (amp_error_infidelity(0.003), phase_error_infidelity(0.002)),
        ]
        worst_amp, worst_phase = worst_case(results)
        assert worst_amp == amp_error_infidelity(0.003).exact
        assert worst_phase == phase_error_infidelity(0.01).exact
        assert worst_case([]) == (0.0, 0.0)
