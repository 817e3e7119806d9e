"""
Time-multiplexed stability campaign.

Every round, channel k of unit u emits one pulse in slot 5u + k; the pulses
are combined onto the shared capture path, downconverted, demodulated and
reduced to a mean amplitude and phase. Thermal state advances on its own
time step and is sampled at each round start.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.config import settings
from src.constants import (
    CAPTURE_BLOCK_SAMPLES,
    CONTROL_OFF,
    CONTROL_ON,
    DEFAULT_CARRIER,
    DEFAULT_CHANNELS_PER_UNIT,
    DEFAULT_FULL_SCALE_DBM,
    DEFAULT_GUARD_FRACTION,
    DEFAULT_PULSE_DURATION,
    DEFAULT_PULSE_GAP,
    DEFAULT_ROUND_PERIOD,
    DEFAULT_SAMPLE_RATE,
    DEFAULT_TOTAL_DURATION,
    DEFAULT_UNITS,
    ERROR_GUARD_EMPTY,
    ERROR_NOT_INTEGRAL,
    ERROR_SCHEDULE_OVERFLOW,
    SYNC_TICK_HZ,
)
from src.exceptions import CampaignError, ConfigurationError, MeasurementError, SimulatorError
from src.services.analysis import ChannelSeries, unwrap_phase
from src.services.coupling import DeviceSensitivity, perturbation_arrays
from src.services.rfchain import (
    ChannelId,
    ComplexEnvelope,
    LoState,
    SignalPath,
    circular_noise,
    lo_phasor,
    noise_sigma,
)
from src.services.thermal import AmbientProfile, PiLoop, SensorModel, ThermalNetwork, ThermalNode
from src.utils.logging import get_logger
from src.utils.phase import wrap_degrees

logger = get_logger("schedule_capture")


def _exact(value: float) -> Fraction:
    if not math.isfinite(value):
        raise ConfigurationError(f"{value} is not a finite number")
    return Fraction(str(value))


def _integral_count(name: str, value: float, per_unit: float, unit: str) -> int:
    count = _exact(value) * _exact(per_unit)
    if count.denominator != 1:
        raise ConfigurationError(ERROR_NOT_INTEGRAL.format(name=name, value=value, unit=unit))
    return int(count)


@dataclass(frozen=True)
class MeasurementPlan:
    units: int = DEFAULT_UNITS
    channels_per_unit: int = DEFAULT_CHANNELS_PER_UNIT
    pulse_duration: float = DEFAULT_PULSE_DURATION
    pulse_gap: float = DEFAULT_PULSE_GAP
    round_period: float = DEFAULT_ROUND_PERIOD
    total_duration: float = DEFAULT_TOTAL_DURATION
    carrier: float = DEFAULT_CARRIER
    sample_rate: float = DEFAULT_SAMPLE_RATE
    guard_fraction: float = DEFAULT_GUARD_FRACTION
    demod_freq: float = 0.0
    sync_tick_hz: int = SYNC_TICK_HZ

    @property
    def slots(self) -> int:
        return self.units * self.channels_per_unit

    @property
    def pulse_samples(self) -> int:
        return _integral_count("pulse_duration", self.pulse_duration, self.sample_rate, "samples")

    @property
    def slot_samples(self) -> int:
        return self.pulse_samples + _integral_count("pulse_gap", self.pulse_gap, self.sample_rate, "samples")

    @property
    def round_samples(self) -> int:
        return _integral_count("round_period", self.round_period, self.sample_rate, "samples")

    @property
    def round_period_ticks(self) -> int:
        return _integral_count("round_period", self.round_period, self.sync_tick_hz, "sync ticks")

    @property
    def n_rounds(self) -> int:
        return math.floor(_exact(self.total_duration) / _exact(self.round_period))

    def validate(self) -> None:
        """
        Check the plan invariants.

        Raises:
            ConfigurationError: Naming the violated inequality
        """
        if self.units < 1 or self.channels_per_unit < 1:
            raise ConfigurationError("units and channels_per_unit must be >= 1")
        if self.pulse_duration <= 0 or self.pulse_gap < 0 or self.round_period <= 0 or self.total_duration <= 0:
            raise ConfigurationError("pulse_duration, round_period and total_duration must be > 0 and pulse_gap >= 0")
        if not 0.0 <= self.guard_fraction < 0.5:
            raise ConfigurationError(f"guard_fraction must be in [0, 0.5), got {self.guard_fraction}")
        needed = (_exact(self.pulse_duration) + _exact(self.pulse_gap)) * self.slots
        if needed > _exact(self.round_period):
            raise ConfigurationError(ERROR_SCHEDULE_OVERFLOW.format(needed=float(needed), round_period=self.round_period))
        # integrality of pulse, gap and round in samples and sync ticks
        _ = (self.slot_samples, self.round_samples, self.round_period_ticks)

    def slot_of(self, channel_id: ChannelId) -> int:
        return channel_id.unit * self.channels_per_unit + channel_id.ch

    def channel_order(self) -> List[ChannelId]:
        return [ChannelId(u, k) for u in range(self.units) for k in range(self.channels_per_unit)]


class ScheduledPulse(NamedTuple):
    channel_id: ChannelId
    round_index: int
    start_sample: int
    start_time: float


class PulseRecord(NamedTuple):
    channel_id: ChannelId
    round_index: int
    timestamp: float
    mean_amplitude: float
    mean_phase: float


def build_schedule(plan: MeasurementPlan, n_rounds: Optional[int] = None) -> List[ScheduledPulse]:
    """
    Slot assignment for every pulse of the campaign.

    Channel k of unit u takes slot 5u + k; start = round * round_period + slot * (pulse + gap).
    Times are integer sample counts, converted to seconds for reporting.
    """
    plan.validate()
    rounds = plan.n_rounds if n_rounds is None else n_rounds
    round_samples = plan.round_samples
    slot_samples = plan.slot_samples
    schedule = []
    for r in range(rounds):
        for channel_id in plan.channel_order():
            start = r * round_samples + plan.slot_of(channel_id) * slot_samples
            schedule.append(ScheduledPulse(channel_id, r, start, start / plan.sample_rate))
    return schedule


def capture_windows(
    samples: np.ndarray,
    start_indices: np.ndarray,
    sample_rate: float,
    demod: float,
    guard_fraction: float = DEFAULT_GUARD_FRACTION,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    capture_pulse over a stack of equal-length windows.

    Args:
        samples: (..., count) window samples
        start_indices: (...) global sample index of each window's first sample
        sample_rate: Simulation sample rate
        demod: Digital demodulation frequency in Hz
        guard_fraction: Fraction of samples dropped at each edge

    Returns:
        (magnitudes, phases in degrees within (-180, 180]), each shaped (...)
    """
    count = samples.shape[-1]
    guard = int(math.floor(guard_fraction * count))
    if count == 0 or count - 2 * guard <= 0:
        raise MeasurementError(ERROR_GUARD_EMPTY.format(guard=guard, count=count))
    if demod:
        indices = np.asarray(start_indices, dtype=np.int64)[..., np.newaxis] + np.arange(count, dtype=np.int64)
        samples = samples * np.conj(lo_phasor(demod, 0.0, indices, sample_rate))
    mean = samples[..., guard:count - guard].mean(axis=-1)
    return np.abs(mean), wrap_degrees(np.degrees(np.arctan2(mean.imag, mean.real)))


def capture_pulse(env: ComplexEnvelope, demod: float, guard_fraction: float = DEFAULT_GUARD_FRACTION) -> Tuple[float, float]:
    """
    Mean amplitude and phase of a captured pulse.

    Args:
        env: Captured window
        demod: Digital demodulation frequency in Hz
        guard_fraction: Fraction of samples dropped at each edge

    Returns:
        (magnitude, phase in degrees within (-180, 180]) of the complex mean

    Raises:
        MeasurementError: Empty window or guards that discard every sample
    """
    magnitude, phase = capture_windows(env.samples, np.int64(env.start_index), env.sample_rate, demod, guard_fraction)
    return float(magnitude), float(phase)


@dataclass
class CampaignSetup:
    """Domain objects a campaign runs on, resolved from a scenario."""
    plan: MeasurementPlan
    nodes: List[ThermalNode]
    loops: List[PiLoop]
    sensor: SensorModel
    ambient: AmbientProfile
    dt: float
    warmup: float
    trace_interval: float
    sensitivities: Dict[str, DeviceSensitivity]
    channels: List[SignalPath]
    capture_path: SignalPath
    local_oscillators: Dict[str, LoState]
    lo_devices: Dict[str, Optional[str]] = field(default_factory=dict)
    noise_density: Optional[float] = None
    full_scale_dbm: float = DEFAULT_FULL_SCALE_DBM
    control_period: Optional[float] = None


@dataclass
class ThermalHistory:
    """Node temperatures at each round start plus the decimated trace."""
    node_ids: List[str]
    round_temperatures: np.ndarray
    trace_times: np.ndarray
    trace_temperatures: np.ndarray
    trace_duties: np.ndarray

    def column(self, node_id: str) -> np.ndarray:
        return self.round_temperatures[:, self.node_ids.index(node_id)]


@dataclass
class PathResponse:
    """Per-round gain and phase of each measured channel and of the capture stage."""
    channel_gain: np.ndarray  # (channels, rounds)
    channel_phase: np.ndarray
    channel_lo_phase: np.ndarray  # LO phase of upconverted channels, 0 for ctrl
    capture_gain: np.ndarray  # (rounds,)
    capture_phase: np.ndarray
    capture_lo_phase: np.ndarray


def round_start_samples(plan: MeasurementPlan, n_rounds: int) -> np.ndarray:
    return np.arange(n_rounds, dtype=np.int64) * plan.round_samples


def simulate_thermal(setup: CampaignSetup, control: str, rng: np.random.Generator, n_rounds: int) -> ThermalHistory:
    """Run the thermal network through warm-up and sample it at every round start."""
    network = ThermalNetwork(
        setup.nodes, setup.loops, setup.sensor, setup.ambient, setup.dt,
        control=(control == CONTROL_ON), rng=rng, control_period=setup.control_period,
    )
    warmup_steps = int(round(setup.warmup / setup.dt))
    round_times = round_start_samples(setup.plan, n_rounds) / setup.plan.sample_rate
    sample_steps = warmup_steps + np.rint(round_times / setup.dt).astype(np.int64)
    trace_every = max(1, int(round(setup.trace_interval / setup.dt))) if setup.trace_interval > 0 else 0
    result = network.run(sample_steps, trace_every=trace_every, trace_from=warmup_steps)
    return ThermalHistory(
        node_ids=result.node_ids,
        round_temperatures=result.samples,
        trace_times=result.trace_times - warmup_steps * setup.dt,
        trace_temperatures=result.trace_temperatures,
        trace_duties=result.trace_duties,
    )


def _device_perturbation(setup: CampaignSetup, device_ids: Sequence[str], history: ThermalHistory,
                         sensitivities: Dict[str, DeviceSensitivity]) -> Tuple[np.ndarray, np.ndarray]:
    devices = [sensitivities[d] for d in device_ids]
    if not devices:
        n = len(history.round_temperatures)
        return np.ones(n), np.zeros(n)
    temps = np.column_stack([history.column(d.thermal_node) for d in devices])
    return perturbation_arrays(devices, temps)


def _lo_perturbation(setup: CampaignSetup, lo_id: Optional[str], history: ThermalHistory,
                     sensitivities: Dict[str, DeviceSensitivity]) -> Tuple[np.ndarray, np.ndarray]:
    pll = setup.lo_devices.get(lo_id) if lo_id else None
    return _device_perturbation(setup, [pll] if pll else [], history, sensitivities)


def path_response(setup: CampaignSetup, history: ThermalHistory,
                  sensitivities: Optional[Dict[str, DeviceSensitivity]] = None) -> PathResponse:
    """
    Temperature-induced gain and phase of every stage, for every round.

    The PLL behind an LO contributes its phase coefficient to the LO phase
    and its amplitude coefficient to the gain of the converting path.
    """
    sens = setup.sensitivities if sensitivities is None else sensitivities
    gains, phases, lo_phases = [], [], []
    for path in setup.channels:
        try:
            g, p = _device_perturbation(setup, path.device_bindings, history, sens)
            lo_g, lo_p = _lo_perturbation(setup, path.lo_binding, history, sens)
        except SimulatorError as exc:
            raise CampaignError(str(exc), channel=str(path.channel_id)) from exc
        gains.append(g * lo_g)
        phases.append(p)
        lo_phases.append(lo_p)
    try:
        cap_g, cap_p = _device_perturbation(setup, setup.capture_path.device_bindings, history, sens)
        lo_g, lo_p = _lo_perturbation(setup, setup.capture_path.lo_binding, history, sens)
    except SimulatorError as exc:
        raise CampaignError(str(exc), channel=str(setup.capture_path.channel_id)) from exc
    return PathResponse(
        channel_gain=np.array(gains),
        channel_phase=np.array(phases),
        channel_lo_phase=np.array(lo_phases),
        capture_gain=cap_g * lo_g,
        capture_phase=cap_p,
        capture_lo_phase=lo_p,
    )


def noise_free_capture(setup: CampaignSetup, response: PathResponse) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closed-form capture result without noise: gain * exp(i * phase) per channel and round.

    With a commensurate frequency plan every rotation reduces to its LO phase,
    so the capture of a constant pulse equals this product exactly up to rounding.
    """
    base_gain = np.array([p.baseline_gain for p in setup.channels])[:, np.newaxis]
    base_phase = np.array([p.baseline_phase for p in setup.channels])[:, np.newaxis]
    capture_lo = setup.local_oscillators[setup.capture_path.lo_binding]
    channel_lo = np.array([
        setup.local_oscillators[p.lo_binding].phase if p.lo_binding else 0.0 for p in setup.channels
    ])[:, np.newaxis]
    amplitude = base_gain * response.channel_gain * response.capture_gain
    phase = (base_phase + response.channel_phase + channel_lo + response.channel_lo_phase
             + response.capture_phase - capture_lo.phase - response.capture_lo_phase)
    return amplitude, wrap_degrees(phase)


@dataclass
class CampaignResult:
    control: str
    seed: int
    plan: MeasurementPlan
    series: List[ChannelSeries]
    raw_phases: np.ndarray  # (channels, rounds), wrapped
    thermal: ThermalHistory

    @property
    def n_rounds(self) -> int:
        return self.raw_phases.shape[1]

    def records(self, channel_id: Optional[ChannelId] = None) -> Iterator[PulseRecord]:
        for index, series in enumerate(self.series):
            if channel_id is not None and series.channel_id != channel_id:
                continue
            for r in range(len(series)):
                yield PulseRecord(series.channel_id, r, float(series.timestamps[r]),
                                  float(series.amplitudes[r]), float(self.raw_phases[index, r]))


EnvelopeSink = Callable[[ComplexEnvelope], None]


def run_campaign(
    setup: CampaignSetup,
    control: str = CONTROL_ON,
    seed: int = 0,
    envelope_sink: Optional[EnvelopeSink] = None,
) -> CampaignResult:
    """
    Simulate the full measurement campaign.

    Args:
        setup: Resolved scenario
        control: "on" runs the PI loops, "off" holds every actuator at its hold_duty
        seed: Root seed; thermal sensing and RF noise get independent child streams
        envelope_sink: Optional callback receiving every captured window

    Returns:
        CampaignResult with one ChannelSeries per measured channel

    Raises:
        CampaignError: A module error, with round/channel context
    """
    if control not in (CONTROL_ON, CONTROL_OFF):
        raise ConfigurationError(f"control must be '{CONTROL_ON}' or '{CONTROL_OFF}', got '{control}'")
    plan = setup.plan
    plan.validate()
    n_rounds = plan.n_rounds
    thermal_seed, rf_seed = np.random.SeedSequence(seed).spawn(2)
    thermal_rng = np.random.default_rng(thermal_seed)
    rf_rng = np.random.default_rng(rf_seed)

    logger.info("campaign_started", control=control, seed=seed, rounds=n_rounds, channels=len(setup.channels))
    history = simulate_thermal(setup, control, thermal_rng, n_rounds)
    response = path_response(setup, history)

    fs = plan.sample_rate
    pulse_samples = plan.pulse_samples
    slot_offsets = np.array([plan.slot_of(p.channel_id) * plan.slot_samples for p in setup.channels], dtype=np.int64)
    round_starts = round_start_samples(plan, n_rounds)
    capture_lo = setup.local_oscillators[setup.capture_path.lo_binding]
    channel_los = [setup.local_oscillators[p.lo_binding] if p.lo_binding else None for p in setup.channels]
    centers = {p.nco_freq + (lo.frequency if lo else 0.0) for p, lo in zip(setup.channels, channel_los)}
    if len(centers) != 1:
        raise ConfigurationError("measured channels must share one RF frequency on the capture path")
    center = centers.pop() - capture_lo.frequency
    sigma = noise_sigma(setup.noise_density, fs, setup.full_scale_dbm)

    base_gain = np.array([p.baseline_gain for p in setup.channels])[:, np.newaxis]
    base_phase = np.array([p.baseline_phase for p in setup.channels])[:, np.newaxis]
    pulse_amp = base_gain * response.channel_gain
    pulse_rad = np.deg2rad(base_phase + response.channel_phase)
    pulse_values = pulse_amp * (np.cos(pulse_rad) + 1j * np.sin(pulse_rad))
    capture_rad = np.deg2rad(response.capture_phase)
    capture_factor = response.capture_gain * (np.cos(capture_rad) + 1j * np.sin(capture_rad))

    n_channels = len(setup.channels)
    block = max(1, CAPTURE_BLOCK_SAMPLES // (n_channels * pulse_samples))
    offsets = np.arange(pulse_samples, dtype=np.int64)
    amplitudes = np.empty((n_channels, n_rounds))
    phases = np.empty((n_channels, n_rounds))
    progress_every = max(1, settings.progress_interval_rounds)

    for r0 in range(0, n_rounds, block):
        r1 = min(n_rounds, r0 + block)
        try:
            starts = round_starts[r0:r1, np.newaxis] + slot_offsets  # (rounds, channels)
            indices = starts[..., np.newaxis] + offsets
            stack = np.repeat(pulse_values[:, r0:r1].T[..., np.newaxis], pulse_samples, axis=-1)
            for c, lo in enumerate(channel_los):
                if lo is not None:
                    lo_phase = lo.phase + response.channel_lo_phase[c, r0:r1, np.newaxis]
                    stack[:, c, :] *= lo_phasor(lo.frequency, lo_phase, indices[:, c, :], fs)
            stack *= capture_factor[r0:r1, np.newaxis, np.newaxis]
            if sigma:
                stack += circular_noise(stack.shape, sigma, rf_rng)
            rx_phase = capture_lo.phase + response.capture_lo_phase[r0:r1, np.newaxis, np.newaxis]
            stack *= np.conj(lo_phasor(capture_lo.frequency, rx_phase, indices, fs))
            if envelope_sink is not None:
                for b in range(r1 - r0):
                    for c in range(n_channels):
                        envelope_sink(ComplexEnvelope(stack[b, c], fs, starts[b, c] / fs, center))
            amps, degs = capture_windows(stack, starts, fs, plan.demod_freq, plan.guard_fraction)
        except SimulatorError as exc:
            raise CampaignError(str(exc), round_index=r0) from exc
        amplitudes[:, r0:r1] = amps.T
        phases[:, r0:r1] = degs.T
        if r1 // progress_every > r0 // progress_every:
            logger.info("campaign_progress", round=r1, total=n_rounds)

    timestamps = [(round_starts + offset) / fs for offset in slot_offsets]
    series = [
        ChannelSeries(path.channel_id, timestamps[c], amplitudes[c], unwrap_phase(phases[c]))
        for c, path in enumerate(setup.channels)
    ]
    logger.info("campaign_finished", control=control, rounds=n_rounds)
    return CampaignResult(control=control, seed=seed, plan=plan, series=series, raw_phases=phases, thermal=history)
