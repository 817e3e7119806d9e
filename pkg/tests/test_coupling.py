"""
Tests for temperature-to-RF coupling.
"""

import math

import numpy as np
import pytest

from src.exceptions import CouplingError
from src.services.coupling import (
    IDENTITY,
    DeviceKind,
    DeviceSensitivity,
    PathPerturbation,
    perturbation_arrays,
    perturbation_for,
)


@pytest.fixture
def amplifier():
    return DeviceSensitivity("u0.amp0", DeviceKind.AMPLIFIER, amp_coeff=-0.002, reference_temp=45.0)


@pytest.fixture
def pll():
    return DeviceSensitivity("u0.pll_dac0", DeviceKind.PLL, amp_coeff=-0.0005, phase_coeff=-0.44, reference_temp=45.0)


@pytest.fixture
def cable():
    return DeviceSensitivity("u0.cable0", DeviceKind.PASSIVE, amp_coeff=-0.001, phase_coeff=-0.44,
                             reference_temp=25.0, node_id="harness")


class TestDeviceSensitivity:
    """Test cases for device coefficient validation."""

    def test_amplifier_rejects_phase(self):
        """Test an amplifier with a phase coefficient is rejected."""
        with pytest.raises(CouplingError, match="phase_coeff"):
            DeviceSensitivity("u0.amp0", DeviceKind.AMPLIFIER, phase_coeff=0.1)

    def test_thermal_node_defaults_to_device(self, amplifier, cable):
        """Test the followed node is node_id or else the device itself."""
        assert amplifier.thermal_node == "u0.amp0"
        assert cable.thermal_node == "harness"

    def test_scaled(self, pll):
        """Test scaling multiplies each coefficient independently."""
        scaled = pll.scaled(2.0, 0.5)
        assert scaled.amp_coeff == pytest.approx(-0.001)
        assert scaled.phase_coeff == pytest.approx(-0.22)
        assert scaled.reference_temp == pll.reference_temp


class TestPerturbationFor:
    """Test cases for the per-path perturbation model."""

    def test_reference_temperature_is_identity(self, amplifier, pll):
        """Test no perturbation at the reference temperatures."""
        result = perturbation_for([(amplifier, 45.0), (pll, 45.0)])
        assert result == IDENTITY

    def test_gains_multiply_and_phases_add(self, amplifier, pll, cable):
        """Test gain = prod(1 + a dT) and phase = sum(p dT)."""
        result = perturbation_for([(amplifier, 46.0), (pll, 44.0), (cable, 26.5)])
        expected_gain = (1 - 0.002) * (1 + 0.0005) * (1 - 0.0015)
        assert result.gain_multiplier == pytest.approx(expected_gain, rel=1e-15)
        assert result.phase_offset == pytest.approx(0.44 - 0.66, abs=1e-15)

    def test_order_independent(self, amplifier, pll, cable):
        """Test the fold does not depend on list order."""
        items = [(amplifier, 47.3), (pll, 44.1), (cable, 23.9)]
        forward = perturbation_for(items)
        backward = perturbation_for(list(reversed(items)))
        assert forward.gain_multiplier == backward.gain_multiplier
        assert forward.phase_offset == backward.phase_offset

    def test_nonfinite_temperature(self, amplifier):
        """Test NaN temperature raises."""
        with pytest.raises(CouplingError, match="u0.amp0"):
            perturbation_for([(amplifier, math.nan)])

    def test_gain_leaves_small_signal_regime(self):
        """Test a non-positive gain product raises."""
        hot = DeviceSensitivity("amp", DeviceKind.AMPLIFIER, amp_coeff=-0.1, reference_temp=25.0)
        with pytest.raises(CouplingError):
            perturbation_for([(hot, 45.0)])

    def test_empty_path(self):
        """Test a path with no devices is unperturbed."""
        assert perturbation_for([]) == IDENTITY


class TestPathPerturbation:
    """Test cases for cascading stages."""

    def test_then(self):
        """Test cascading multiplies gains and adds phases."""
        combined = PathPerturbation(0.99, 1.0).then(PathPerturbation(1.02, -0.5))
        assert combined.gain_multiplier == pytest.approx(0.99 * 1.02)
        assert combined.phase_offset == pytest.approx(0.5)

    def test_nonpositive_gain(self):
        """Test zero gain is rejected."""
        with pytest.raises(CouplingError):
            PathPerturbation(0.0, 0.0)


class TestPerturbationArrays:
    """Test cases for the vectorized model."""

    def test_matches_scalar_model(self, amplifier, pll, cable, rng):
        """Test each row equals perturbation_for on the same temperatures."""
        devices = [amplifier, pll, cable]
        temps = np.column_stack([
            rng.normal(45.0, 0.5, 50), rng.normal(45.0, 0.5, 50), rng.normal(25.0, 1.5, 50),
        ])
        gain, phase = perturbation_arrays(devices, temps)
        for row in range(50):
            expected = perturbation_for(list(zip(devices, temps[row])))
            assert gain[row] == pytest.approx(expected.gain_multiplier, rel=1e-14)
            assert phase[row] == pytest.approx(expected.phase_offset, abs=1e-13)

    def test_one_dimensional_input(self, cable):
        """Test a single device accepts a plain series."""
        gain, phase = perturbation_arrays([cable], np.array([25.0, 26.0]))
        np.testing.assert_allclose(gain, [1.0, 0.999])
        np.testing.assert_allclose(phase, [0.0, -0.44])

    def test_no_devices(self):
        """Test an empty device list yields unit gain and zero phase."""
        gain, phase = perturbation_arrays([], np.empty((3, 0)))
        np.testing.assert_array_equal(gain, np.ones(3))
        np.testing.assert_array_equal(phase, np.zeros(3))

    def test_nonfinite_names_device(self, amplifier, pll):
        """Test the error names the device with the bad temperature."""
        temps = np.array([[45.0, 45.0], [45.0, np.inf]])
        with pytest.raises(CouplingError, match="u0.pll_dac0"):
            perturbation_arrays([amplifier, pll], temps)
