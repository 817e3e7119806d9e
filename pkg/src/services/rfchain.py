"""
Complex-baseband RF chain.

Pulses are synthesized relative to their NCO frequency; LO conversion stages
are exact rotations evaluated at integer sample indices. Hardware rates are
not simulated sample by sample: the chain runs at a decimated rate (1-10 MS/s)
and every conversion frequency is a multiple of that rate, so conversion
tones alias to DC without accumulated floating-point phase.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.constants import DEFAULT_FULL_SCALE_DBM, DEFAULT_SAMPLE_RATE, ERROR_NOT_INTEGRAL
from src.exceptions import ConfigurationError
from src.models.registry import port_requires_lo
from src.services.coupling import IDENTITY, PathPerturbation
from src.utils.phase import aliases_to_dc, fractional_cycles


class PortKind(str, Enum):
    CTRL = "ctrl"
    ROUT = "rout"
    PUMP = "pump"
    RIN = "rin"
    MONITOR = "monitor"


class ChannelId(NamedTuple):
    unit: int
    ch: int

    def __str__(self) -> str:
        return f"u{self.unit}.ch{self.ch}"


@dataclass(frozen=True)
class SignalPath:
    """One port of one unit: NCO, optional LO, and the devices it passes through."""
    channel_id: ChannelId
    port_kind: PortKind
    nco_freq: float
    lo_binding: Optional[str] = None
    device_bindings: Tuple[str, ...] = ()
    baseline_gain: float = 1.0
    baseline_phase: float = 0.0

    def __post_init__(self):
        kind = PortKind(self.port_kind)
        if port_requires_lo(kind.value) and not self.lo_binding:
            raise ConfigurationError(f"{kind.value} path {self.channel_id} needs an lo_binding")
        if not port_requires_lo(kind.value) and self.lo_binding:
            raise ConfigurationError(f"ctrl path {self.channel_id} is DAC-direct and cannot bind an LO")
        if self.baseline_gain <= 0:
            raise ConfigurationError(f"path {self.channel_id}: baseline_gain must be > 0")


@dataclass(frozen=True)
class LoState:
    """Local oscillator; phase carries the free-running offset plus PLL drift."""
    lo_id: str
    frequency: float
    phase: float = 0.0

    def __post_init__(self):
        if self.frequency < 0:
            raise ConfigurationError(f"LO '{self.lo_id}': frequency must be >= 0")

    def shifted(self, phase_offset: float) -> "LoState":
        return LoState(self.lo_id, self.frequency, self.phase + phase_offset)


@dataclass(frozen=True, eq=False)
class ComplexEnvelope:
    samples: np.ndarray
    sample_rate: float
    start_time: float = 0.0
    center_freq: float = 0.0

    @property
    def start_index(self) -> int:
        return int(round(self.start_time * self.sample_rate))

    @property
    def sample_indices(self) -> np.ndarray:
        return self.start_index + np.arange(len(self.samples), dtype=np.int64)

    @property
    def times(self) -> np.ndarray:
        return self.sample_indices / self.sample_rate

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def with_samples(self, samples: np.ndarray, center_freq: Optional[float] = None) -> "ComplexEnvelope":
        return ComplexEnvelope(
            samples=samples,
            sample_rate=self.sample_rate,
            start_time=self.start_time,
            center_freq=self.center_freq if center_freq is None else center_freq,
        )

    def window(self, start: int, count: int) -> "ComplexEnvelope":
        """Sub-envelope of count samples starting at offset start."""
        return ComplexEnvelope(
            samples=self.samples[start:start + count],
            sample_rate=self.sample_rate,
            start_time=(self.start_index + start) / self.sample_rate,
            center_freq=self.center_freq,
        )


def sample_count(duration: float, sample_rate: float) -> int:
    exact = duration * sample_rate
    count = int(round(exact))
    if abs(exact - count) > 1e-6 * max(1.0, exact):
        raise ConfigurationError(ERROR_NOT_INTEGRAL.format(name="duration", value=duration, unit="samples"))
    return count


def synthesize_pulse(
    path: SignalPath,
    duration: float,
    perturbation: PathPerturbation = IDENTITY,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    start_time: float = 0.0,
) -> ComplexEnvelope:
    """
    Rectangular pulse at complex baseband relative to the path's NCO.

    Args:
        path: Emitting path
        duration: Pulse length in seconds (> 0)
        perturbation: Temperature-induced gain/phase of the path
        sample_rate: Simulation sample rate
        start_time: Pulse start on the global timeline

    Returns:
        Envelope with constant value gain * exp(i * phase)
    """
    if duration <= 0:
        raise ConfigurationError(f"pulse duration must be > 0, got {duration}")
    amplitude = path.baseline_gain * perturbation.gain_multiplier
    phase = math.radians(path.baseline_phase + perturbation.phase_offset)
    value = amplitude * complex(math.cos(phase), math.sin(phase))
    samples = np.full(sample_count(duration, sample_rate), value, dtype=complex)
    return ComplexEnvelope(samples, sample_rate, start_time, path.nco_freq)


def rotation_angles(env: ComplexEnvelope, lo: LoState) -> np.ndarray:
    """LO angle in degrees at each sample: phase + 360 * frac(f * n / fs)."""
    return lo.phase + 360.0 * fractional_cycles(lo.frequency, env.sample_indices, env.sample_rate)


def _phasor(angles_deg: np.ndarray) -> np.ndarray:
    radians = np.deg2rad(angles_deg)
    return np.cos(radians) + 1j * np.sin(radians)


def lo_phasor(frequency: float, phase, sample_indices: np.ndarray, sample_rate: float) -> np.ndarray:
    """
    exp(+i * angle) of an LO at integer sample indices, angle in degrees.

    phase may be an array that broadcasts against sample_indices. An LO that
    aliases to DC yields just the phase term, shaped like phase.
    """
    if aliases_to_dc(frequency, sample_rate):
        return _phasor(np.asarray(phase, dtype=float))
    return _phasor(phase + 360.0 * fractional_cycles(frequency, sample_indices, sample_rate))


def upconvert(env: ComplexEnvelope, lo: LoState) -> ComplexEnvelope:
    """Mix with the LO: multiply by exp(+i * angle); center moves up by lo.frequency."""
    rotation = lo_phasor(lo.frequency, lo.phase, env.sample_indices, env.sample_rate)
    return env.with_samples(env.samples * rotation, env.center_freq + lo.frequency)


def downconvert(env: ComplexEnvelope, lo: LoState) -> ComplexEnvelope:
    """Exact conjugate of upconvert (e^{-i wt} demodulation convention)."""
    rotation = np.conj(lo_phasor(lo.frequency, lo.phase, env.sample_indices, env.sample_rate))
    return env.with_samples(env.samples * rotation, env.center_freq - lo.frequency)


def loopback(env: ComplexEnvelope, tx_lo: LoState, rx_lo: LoState) -> ComplexEnvelope:
    """
    ROUT -> RIN path: upconvert with tx_lo, downconvert with rx_lo.

    The two angles are differenced before a single rotation is applied, so
    with a shared LO the net angle is exactly zero whatever its phase.
    """
    net = rotation_angles(env, tx_lo) - rotation_angles(env, rx_lo)
    return env.with_samples(env.samples * _phasor(net), env.center_freq + tx_lo.frequency - rx_lo.frequency)


def apply_perturbation(env: ComplexEnvelope, perturbation: PathPerturbation) -> ComplexEnvelope:
    """Gain/phase stage of a converting path (mixer, LO drive)."""
    if perturbation == IDENTITY:
        return env
    phase = math.radians(perturbation.phase_offset)
    factor = perturbation.gain_multiplier * complex(math.cos(phase), math.sin(phase))
    return env.with_samples(env.samples * factor)


def combine(envelopes: Sequence[ComplexEnvelope], offsets: Optional[Sequence[float]] = None) -> ComplexEnvelope:
    """
    Place pulses on one stream; gaps are exact zeros and overlaps add.

    Args:
        envelopes: Pulses sharing one sample rate and center frequency
        offsets: Start times in seconds (defaults to each envelope's start_time)

    Returns:
        Stream starting at the earliest offset
    """
    if not envelopes:
        raise ConfigurationError("combine needs at least one envelope")
    sample_rate = envelopes[0].sample_rate
    center = envelopes[0].center_freq
    for env in envelopes:
        if env.sample_rate != sample_rate or env.center_freq != center:
            raise ConfigurationError("combined envelopes must share sample rate and center frequency")
    if offsets is None:
        starts = [env.start_index for env in envelopes]
    else:
        starts = [int(round(offset * sample_rate)) for offset in offsets]
    origin = min(starts)
    end = max(start + len(env.samples) for start, env in zip(starts, envelopes))
    stream = np.zeros(end - origin, dtype=complex)
    for start, env in zip(starts, envelopes):
        stream[start - origin:start - origin + len(env.samples)] += env.samples
    return ComplexEnvelope(stream, sample_rate, origin / sample_rate, center)


def noise_sigma(density_dbm_per_hz: Optional[float], sample_rate: float, full_scale_dbm: float = DEFAULT_FULL_SCALE_DBM) -> float:
    """Total complex noise std relative to a full-scale pulse of magnitude 1."""
    if density_dbm_per_hz is None or math.isinf(density_dbm_per_hz):
        return 0.0
    power_db = density_dbm_per_hz + 10.0 * math.log10(sample_rate) - full_scale_dbm
    return math.sqrt(10.0 ** (power_db / 10.0))


def circular_noise(shape: Tuple[int, ...], sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Complex Gaussian noise with total std sigma split evenly over I and Q."""
    draws = rng.standard_normal((2,) + tuple(shape))
    return (sigma / math.sqrt(2.0)) * (draws[0] + 1j * draws[1])


def add_noise_floor(
    env: ComplexEnvelope,
    density_dbm_per_hz: Optional[float],
    rng: np.random.Generator,
    full_scale_dbm: float = DEFAULT_FULL_SCALE_DBM,
) -> ComplexEnvelope:
    """
    Add circular Gaussian noise for a white density over the simulated bandwidth.

    None or -inf disables the noise and returns env unchanged.
    """
    sigma = noise_sigma(density_dbm_per_hz, env.sample_rate, full_scale_dbm)
    if sigma == 0.0:
        return env
    return env.with_samples(env.samples + circular_noise(env.samples.shape, sigma, rng))
