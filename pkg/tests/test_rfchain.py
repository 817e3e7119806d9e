"""
Tests for the complex-baseband RF chain.
"""

import math

import numpy as np
import pytest

from src.exceptions import ConfigurationError
from src.services.coupling import PathPerturbation
from src.services.rfchain import (
    ChannelId,
    ComplexEnvelope,
    LoState,
    PortKind,
    SignalPath,
    add_noise_floor,
    apply_perturbation,
    combine,
    downconvert,
    loopback,
    noise_sigma,
    synthesize_pulse,
    upconvert,
)
from src.utils.phase import fractional_cycles, wrap_degrees


@pytest.fixture
def ctrl_path():
    return SignalPath(ChannelId(0, 2), PortKind.CTRL, nco_freq=5.0e9, baseline_gain=0.9, baseline_phase=30.0)


@pytest.fixture
def tone(rng):
    """Random complex envelope on a long timeline."""
    samples = rng.normal(size=2000) + 1j * rng.normal(size=2000)
    return ComplexEnvelope(samples, 10e6, start_time=3600.0)


class TestSignalPath:
    """Test cases for path validation."""

    def test_ctrl_takes_no_lo(self):
        """Test a DAC-direct path cannot bind an LO."""
        with pytest.raises(ConfigurationError):
            SignalPath(ChannelId(0, 0), PortKind.CTRL, 5e9, lo_binding="u0.lo_trx")

    def test_upconverted_port_needs_lo(self):
        """Test ROUT without an LO is rejected."""
        with pytest.raises(ConfigurationError):
            SignalPath(ChannelId(0, 0), PortKind.ROUT, 1.5e9)

    def test_channel_id_text(self):
        """Test the printable channel identifier."""
        assert str(ChannelId(2, 4)) == "u2.ch4"


class TestSynthesizePulse:
    """Test cases for pulse synthesis."""

    def test_sample_count(self, ctrl_path):
        """Test 100 us at 10 MS/s gives 1000 samples."""
        env = synthesize_pulse(ctrl_path, 100e-6, sample_rate=10e6)
        assert len(env.samples) == 1000
        assert env.center_freq == 5.0e9

    def test_constant_value(self, ctrl_path):
        """Test samples equal gain * exp(i * phase) including the perturbation."""
        env = synthesize_pulse(ctrl_path, 100e-6, PathPerturbation(1.01, -2.0), sample_rate=1e6)
        expected = 0.9 * 1.01 * np.exp(1j * math.radians(28.0))
        np.testing.assert_allclose(env.samples, expected, rtol=1e-15)

    def test_non_integral_duration(self, ctrl_path):
        """Test a duration that is not a whole number of samples is rejected."""
        with pytest.raises(ConfigurationError):
            synthesize_pulse(ctrl_path, 100.5e-6, sample_rate=1e6)

    def test_nonpositive_duration(self, ctrl_path):
        """Test zero duration is rejected."""
        with pytest.raises(ConfigurationError):
            synthesize_pulse(ctrl_path, 0.0)


class TestConversion:
    """Test cases for LO mixing."""

    @pytest.mark.parametrize("freq", [5.5e9, 2.5e9 + 1234.5, 0.0])
    def test_roundtrip(self, tone, freq):
        """Test downconvert(upconvert(x)) == x to 1e-12 relative."""
        lo = LoState("lo", freq, phase=73.0)
        back = downconvert(upconvert(tone, lo), lo)
        error = np.max(np.abs(back.samples - tone.samples)) / np.max(np.abs(tone.samples))
        assert error <= 1e-12
        assert back.center_freq == tone.center_freq

    def test_commensurate_lo_is_pure_phase(self, tone):
        """Test an LO at a multiple of the sample rate only applies its phase."""
        lo = LoState("lo", 5.5e9, phase=90.0)
        up = upconvert(tone, lo)
        np.testing.assert_allclose(up.samples, tone.samples * 1j, atol=1e-15)

    @pytest.mark.parametrize("phase", [0.0, 37.0, 180.0])
    def test_shared_lo_loopback_is_phase_independent(self, tone, phase):
        """Test the ROUT to RIN loopback through one LO is bitwise independent of its phase."""
        reference = loopback(tone, LoState("trx", 5.5e9 + 321.0, 0.0), LoState("trx", 5.5e9 + 321.0, 0.0))
        result = loopback(tone, LoState("trx", 5.5e9 + 321.0, phase), LoState("trx", 5.5e9 + 321.0, phase))
        assert np.array_equal(result.samples, reference.samples)
        assert np.array_equal(result.samples, tone.samples)

    def test_distinct_los_leave_phase_difference(self, tone):
        """Test unshared LOs leave their phase difference on the signal."""
        result = loopback(tone, LoState("a", 5.5e9, 40.0), LoState("b", 5.5e9, 10.0))
        np.testing.assert_allclose(result.samples, tone.samples * np.exp(1j * math.radians(30.0)), atol=1e-14)

    def test_fractional_cycles_exact_for_multiples(self):
        """Test a tone at k * fs aliases to exactly zero cycles at any index."""
        indices = np.array([0, 1, 86_400_000_000, 2 ** 40 + 7], dtype=np.int64)
        assert np.all(fractional_cycles(5.0e9, indices, 1e6) == 0.0)
        np.testing.assert_array_equal(fractional_cycles(250_000.0, np.arange(4), 1e6), [0.0, 0.25, 0.5, 0.75])


class TestStreamOps:
    """Test cases for combining, perturbing and adding noise."""

    def test_combine_places_pulses(self, ctrl_path):
        """Test gaps are zero and each pulse sits at its start index."""
        a = synthesize_pulse(ctrl_path, 2e-6, sample_rate=1e6, start_time=10.0)
        b = synthesize_pulse(ctrl_path, 2e-6, sample_rate=1e6, start_time=10.000004)
        stream = combine([b, a])
        assert stream.start_index == 10_000_000
        assert len(stream.samples) == 6
        np.testing.assert_array_equal(stream.samples[2:4], 0.0)
        np.testing.assert_array_equal(stream.samples[:2], a.samples)
        np.testing.assert_array_equal(stream.window(4, 2).samples, b.samples)

    def test_combine_overlap_adds(self):
        """Test overlapping unit pulses sum to magnitude 2 where they meet."""
        a = ComplexEnvelope(np.ones(4, dtype=complex), 1e6, start_time=0.0)
        b = ComplexEnvelope(np.ones(4, dtype=complex), 1e6, start_time=2e-6)
        stream = combine([a, b])
        np.testing.assert_array_equal(np.abs(stream.samples), [1.0, 1.0, 2.0, 2.0, 1.0, 1.0])

    def test_combine_rejects_mixed_rates(self, ctrl_path):
        """Test envelopes at different rates cannot be combined."""
        a = synthesize_pulse(ctrl_path, 2e-6, sample_rate=1e6)
        b = synthesize_pulse(ctrl_path, 2e-6, sample_rate=2e6)
        with pytest.raises(ConfigurationError):
            combine([a, b])

    def test_apply_perturbation(self, tone):
        """Test a gain/phase stage scales and rotates every sample."""
        out = apply_perturbation(tone, PathPerturbation(0.5, 90.0))
        np.testing.assert_allclose(out.samples, 0.5j * tone.samples, atol=1e-15)

    def test_noise_std(self, rng):
        """Test the added noise std is within 5% of the density-derived sigma."""
        env = ComplexEnvelope(np.zeros(200_000, dtype=complex), 10e6)
        noisy = add_noise_floor(env, -110.0, rng)
        sigma = noise_sigma(-110.0, 10e6)
        assert sigma == pytest.approx(0.01)
        measured = math.sqrt(np.mean(np.abs(noisy.samples) ** 2))
        assert measured == pytest.approx(sigma, rel=0.05)

    def test_noise_same_seed_same_output(self, tone):
        """Test the same generator seed yields identical noisy envelopes."""
        first = add_noise_floor(tone, -120.0, np.random.default_rng(42))
        second = add_noise_floor(tone, -120.0, np.random.default_rng(42))
        np.testing.assert_array_equal(first.samples, second.samples)
        assert not np.array_equal(first.samples, tone.samples)

    @pytest.mark.parametrize("density", [None, -math.inf])
    def test_noise_disabled(self, tone, rng, density):
        """Test a disabled noise floor returns the envelope unchanged."""
        assert add_noise_floor(tone, density, rng) is tone


class TestWrapDegrees:
    """Test cases for the phase wrap."""

    def test_range(self):
        """Test values land in (-180, 180]."""
        np.testing.assert_allclose(wrap_degrees(np.array([180.0, -180.0, 540.0, 181.0])), [180.0, 180.0, 180.0, -179.0])
        assert wrap_degrees(-190.0) == pytest.approx(170.0)
