"""
Thermal simulation for the controller enclosure.

Lumped first-order nodes (devices, enclosure air, external harness) driven by
a room-temperature disturbance and regulated by PI loops that set PWM duties
of heaters and enclosure fans from quantized thermistor readings.

The scalar functions (step_plant, sense, pi_update, apply_fan) define the
model; ThermalNetwork applies the same formulas to all nodes at once.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.constants import (
    ACTUATOR_FAN,
    ACTUATOR_HEATER,
    AMBIENT_ROOM,
    DEFAULT_ADC_BITS,
    DEFAULT_AMBIENT_PERIOD,
    DEFAULT_SENSOR_RANGE,
    ERROR_DT_UNSTABLE,
    ERROR_NOT_INTEGRAL,
    ERROR_TRACE_TOO_SHORT,
    ERROR_UNKNOWN_REFERENCE,
    NOISE_BLOCK_STEPS,
    POLARITY_COOLING,
    POLARITY_HEATING,
)
from src.exceptions import ConfigurationError, PlantStabilityError
from src.utils.logging import get_logger

logger = get_logger("thermal")


class Waveform(str, Enum):
    SINUSOID = "sinusoid"
    RECORDED_TRACE = "recorded-trace"


class Polarity(str, Enum):
    """Sign convention of a loop: heaters push up, fans pull down."""
    HEATING = POLARITY_HEATING
    COOLING = POLARITY_COOLING


class Actuator(str, Enum):
    HEATER = ACTUATOR_HEATER
    FAN = ACTUATOR_FAN


@dataclass(frozen=True)
class AmbientProfile:
    """Room-temperature disturbance."""
    mean: float
    amplitude: float = 0.0
    period: float = DEFAULT_AMBIENT_PERIOD
    waveform: Waveform = Waveform.SINUSOID
    trace_times: Tuple[float, ...] = ()
    trace_values: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.amplitude < 0:
            raise ConfigurationError(f"ambient amplitude must be >= 0, got {self.amplitude}")
        if self.period <= 0:
            raise ConfigurationError(f"ambient period must be > 0, got {self.period}")
        if len(self.trace_times) != len(self.trace_values):
            raise ConfigurationError("ambient trace_times and trace_values differ in length")


@dataclass(frozen=True)
class ThermalNode:
    """Lumped thermal state of one device, enclosure or harness."""
    node_id: str
    temperature: float
    heat_capacity: float
    ambient_coupling: float
    heater_power_max: float = 0.0
    self_heating: float = 0.0
    fan_gain: float = 0.0
    ambient_source: str = AMBIENT_ROOM

    def __post_init__(self):
        if self.heat_capacity <= 0:
            raise ConfigurationError(f"node '{self.node_id}': heat_capacity must be > 0")
        if self.ambient_coupling <= 0:
            raise ConfigurationError(f"node '{self.node_id}': ambient_coupling must be > 0")
        if self.fan_gain < 0:
            raise ConfigurationError(f"node '{self.node_id}': fan_gain must be >= 0")

    @property
    def time_constant(self) -> float:
        return self.heat_capacity / self.ambient_coupling

    def fixed_point(self, heater_power: float, ambient: float) -> float:
        """Equilibrium temperature for constant inputs."""
        return ambient + (heater_power + self.self_heating) / self.ambient_coupling


@dataclass(frozen=True)
class SensorModel:
    """Thermistor digitized by an ADC."""
    adc_bits: int = DEFAULT_ADC_BITS
    full_scale_low: float = DEFAULT_SENSOR_RANGE[0]
    full_scale_high: float = DEFAULT_SENSOR_RANGE[1]
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.full_scale_low >= self.full_scale_high:
            raise ConfigurationError("sensor full_scale_low must be below full_scale_high")
        if self.adc_bits < 1:
            raise ConfigurationError("sensor adc_bits must be >= 1")

    @property
    def levels(self) -> int:
        return 2 ** self.adc_bits

    @property
    def lsb(self) -> float:
        return (self.full_scale_high - self.full_scale_low) / (self.levels - 1)


@dataclass(frozen=True)
class PiLoop:
    """
    One PI feedback loop.

    ``hold_duty`` is the constant duty applied when thermal control is off and
    the bumpless starting output when it is on.
    """
    kp: float
    ki: float
    setpoint: float
    integral: float = 0.0
    duty_min: float = 0.0
    duty_max: float = 1.0
    polarity: Polarity = Polarity.HEATING
    loop_id: str = ""
    node_id: str = ""
    actuator: Actuator = Actuator.HEATER
    hold_duty: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.duty_min <= self.duty_max <= 1.0:
            raise ConfigurationError(f"loop '{self.loop_id}': need 0 <= duty_min <= duty_max <= 1")
        if self.kp < 0 or self.ki < 0:
            raise ConfigurationError(f"loop '{self.loop_id}': gains must be >= 0")

    @property
    def sign(self) -> float:
        return 1.0 if self.polarity == Polarity.HEATING else -1.0

    def error(self, measured: float) -> float:
        return self.sign * (self.setpoint - measured)

    def integral_limit(self) -> float:
        return self.duty_max / self.ki if self.ki > 0 else math.inf

    def preset(self, measured: float) -> "PiLoop":
        """Set the integral so the first output equals hold_duty."""
        if self.ki <= 0:
            return self
        integral = (self.hold_duty - self.kp * self.error(measured)) / self.ki
        limit = self.integral_limit()
        return replace(self, integral=min(max(integral, -limit), limit))


def ambient_at(profile: AmbientProfile, t: float) -> float:
    """
    Evaluate the room temperature at time t.

    Args:
        profile: Ambient profile
        t: Time in seconds (>= 0)

    Returns:
        Temperature in degC

    Raises:
        ConfigurationError: Recorded trace with fewer than 2 samples
    """
    if profile.waveform == Waveform.RECORDED_TRACE:
        if len(profile.trace_times) < 2:
            raise ConfigurationError(ERROR_TRACE_TOO_SHORT.format(count=len(profile.trace_times)))
        return float(np.interp(t, profile.trace_times, profile.trace_values))
    return profile.mean + profile.amplitude * math.sin(2.0 * math.pi * t / profile.period)


def check_time_step(node: ThermalNode, dt: float, coupling: Optional[float] = None) -> None:
    g = node.ambient_coupling if coupling is None else coupling
    max_dt = node.heat_capacity / g
    if dt <= 0 or dt > max_dt:
        raise PlantStabilityError(
            ERROR_DT_UNSTABLE.format(dt=dt, node_id=node.node_id, max_dt=max_dt),
            max_dt=max_dt,
        )


def control_steps(dt: float, control_period: Optional[float]) -> int:
    """Plant steps per PI update; control_period must be a whole multiple of dt."""
    if control_period is None:
        return 1
    if not (math.isfinite(control_period) and control_period > 0):
        raise ConfigurationError(f"control_period must be > 0, got {control_period}")
    steps = int(round(control_period / dt))
    if steps < 1 or abs(steps * dt - control_period) > 1e-9 * control_period:
        raise ConfigurationError(ERROR_NOT_INTEGRAL.format(name="control_period", value=control_period, unit=f"{dt} s steps"))
    return steps


def step_plant(node: ThermalNode, heater_power: float, ambient: float, dt: float) -> ThermalNode:
    """
    Advance one node by one explicit-Euler step.

    Args:
        node: Current node state
        heater_power: Average heater power in W
        ambient: Temperature of whatever the node couples to, degC
        dt: Time step in seconds

    Returns:
        Node with updated temperature

    Raises:
        PlantStabilityError: dt <= 0 or dt > heat_capacity / ambient_coupling
    """
    check_time_step(node, dt)
    g = node.ambient_coupling
    flow = g * (ambient - node.temperature) + heater_power + node.self_heating
    return replace(node, temperature=node.temperature + dt * flow / node.heat_capacity)


def quantize(model: SensorModel, value):
    """Nearest ADC code value, saturating at both range ends. Works on arrays."""
    codes = np.clip(np.rint((np.asarray(value) - model.full_scale_low) / model.lsb), 0, model.levels - 1)
    return model.full_scale_low + codes * model.lsb


def sense(model: SensorModel, true_temp: float, rng_draw: float) -> float:
    """Thermistor reading: noise added, then quantized to the nearest code."""
    return float(quantize(model, true_temp + model.noise_sigma * rng_draw))


def pi_update(loop: PiLoop, measured: float, dt: float) -> Tuple[PiLoop, float]:
    """
    One PI controller update with conditional-integration anti-windup.

    Args:
        loop: Loop with current integral state
        measured: Sensed temperature
        dt: Control period in seconds

    Returns:
        (loop with advanced integral, duty clamped to [duty_min, duty_max])
    """
    error = loop.error(measured)
    raw = loop.kp * error + loop.ki * loop.integral
    duty = min(max(raw, loop.duty_min), loop.duty_max)
    saturated_high = raw > loop.duty_max and error > 0
    saturated_low = raw < loop.duty_min and error < 0
    integral = loop.integral
    if not (saturated_high or saturated_low):
        integral += error * dt
    limit = loop.integral_limit()
    integral = min(max(integral, -limit), limit)
    return replace(loop, integral=integral), duty


def apply_fan(duty: float, enclosure: ThermalNode) -> ThermalNode:
    """Scale convective coupling with fan duty: base * (1 + fan_gain * duty)."""
    return replace(enclosure, ambient_coupling=enclosure.ambient_coupling * (1.0 + enclosure.fan_gain * duty))


def tune_pi(node: ThermalNode, closed_loop_tau: float) -> Tuple[float, float]:
    """
    Pole-zero cancellation gains for a heater loop.

    Plant gain K = heater_power_max / ambient_coupling (degC per unit duty),
    plant time constant tau = C / G. The integral zero cancels the plant pole,
    leaving a first-order closed loop with time constant closed_loop_tau.

    Returns:
        (kp, ki)
    """
    if node.heater_power_max <= 0:
        raise ConfigurationError(f"node '{node.node_id}' has no heater authority")
    if closed_loop_tau <= 0:
        raise ConfigurationError("closed_loop_tau must be > 0")
    plant_gain = node.heater_power_max / node.ambient_coupling
    kp = node.time_constant / (plant_gain * closed_loop_tau)
    return kp, kp / node.time_constant


@dataclass
class LoopTrace:
    times: np.ndarray
    temperatures: np.ndarray
    duties: np.ndarray


def simulate_loop(
    node: ThermalNode,
    loop: Optional[PiLoop],
    sensor: SensorModel,
    ambient: AmbientProfile,
    duration: float,
    dt: float,
    rng: Optional[np.random.Generator] = None,
    control: bool = True,
) -> LoopTrace:
    """
    Single heater-regulated node against the room, one sample per step.

    With control off (or no loop) the heater stays at the loop's hold_duty.
    """
    n_steps = int(round(duration / dt))
    times = np.arange(n_steps + 1) * dt
    temps = np.empty(n_steps + 1)
    duties = np.zeros(n_steps + 1)
    hold = loop.hold_duty if loop is not None else 0.0
    if loop is not None and control:
        loop = loop.preset(sense(sensor, node.temperature, 0.0))

    for i in range(n_steps + 1):
        temps[i] = node.temperature
        if loop is not None and control:
            draw = float(rng.standard_normal()) if rng is not None else 0.0
            loop, duty = pi_update(loop, sense(sensor, node.temperature, draw), dt)
        else:
            duty = hold
        duties[i] = duty
        if i < n_steps:
            node = step_plant(node, duty * node.heater_power_max, ambient_at(ambient, times[i]), dt)
    return LoopTrace(times=times, temperatures=temps, duties=duties)


@dataclass
class NetworkRun:
    """Output of ThermalNetwork.run."""
    node_ids: List[str]
    samples: np.ndarray  # (n_samples, n_nodes)
    trace_times: np.ndarray
    trace_temperatures: np.ndarray  # (n_trace, n_nodes)
    trace_duties: np.ndarray  # (n_trace, n_nodes), NaN where no loop


class PiBank:
    """Vectorized pi_update over many loops."""

    def __init__(self, loops: Sequence[PiLoop]):
        self.kp = np.array([lp.kp for lp in loops], dtype=float)
        self.ki = np.array([lp.ki for lp in loops], dtype=float)
        self.setpoint = np.array([lp.setpoint for lp in loops], dtype=float)
        self.sign = np.array([lp.sign for lp in loops], dtype=float)
        self.duty_min = np.array([lp.duty_min for lp in loops], dtype=float)
        self.duty_max = np.array([lp.duty_max for lp in loops], dtype=float)
        self.integral = np.array([lp.integral for lp in loops], dtype=float)
        self.limit = np.where(self.ki > 0, self.duty_max / np.where(self.ki > 0, self.ki, 1.0), np.inf)

    def update(self, measured: np.ndarray, dt: float) -> np.ndarray:
        error = self.sign * (self.setpoint - measured)
        raw = self.kp * error + self.ki * self.integral
        duty = np.minimum(np.maximum(raw, self.duty_min), self.duty_max)
        saturated = ((raw > self.duty_max) & (error > 0)) | ((raw < self.duty_min) & (error < 0))
        integral = np.where(saturated, self.integral, self.integral + error * dt)
        self.integral = np.minimum(np.maximum(integral, -self.limit), self.limit)
        return duty


class ThermalNetwork:
    """
    Multi-node thermal simulator.

    Every dt each node advances with the step_plant formula; a node's ambient
    is the room or another node (one-way coupling). Every control_period the
    loop nodes are sensed, the PI loops update, and the resulting duties set
    heater power and fan conductance until the next update.
    """

    def __init__(
        self,
        nodes: Sequence[ThermalNode],
        loops: Sequence[PiLoop],
        sensor: SensorModel,
        ambient: AmbientProfile,
        dt: float,
        control: bool = True,
        rng: Optional[np.random.Generator] = None,
        control_period: Optional[float] = None,
    ):
        self.nodes = list(nodes)
        self.loops = list(loops)
        self.sensor = sensor
        self.ambient = ambient
        self.dt = dt
        self.control = control
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.control_every = control_steps(dt, control_period)
        self.control_period = self.control_every * dt

        self.node_ids = [n.node_id for n in self.nodes]
        self._index: Dict[str, int] = {nid: i for i, nid in enumerate(self.node_ids)}
        n = len(self.nodes)

        sources = []
        for node in self.nodes:
            if node.ambient_source == AMBIENT_ROOM:
                sources.append(n)
            elif node.ambient_source in self._index:
                sources.append(self._index[node.ambient_source])
            else:
                raise ConfigurationError(ERROR_UNKNOWN_REFERENCE.format(kind="ambient_source", name=node.ambient_source))
        self._source = np.array(sources, dtype=np.int64)

        self._loop_node = np.array([self._node_index(lp.node_id) for lp in self.loops], dtype=np.int64)
        self._heater = np.array([lp.actuator == Actuator.HEATER for lp in self.loops], dtype=bool)
        self._hold = np.array([lp.hold_duty for lp in self.loops], dtype=float)

        self.capacity = np.array([nd.heat_capacity for nd in self.nodes])
        self.coupling = np.array([nd.ambient_coupling for nd in self.nodes])
        self.fan_gain = np.array([nd.fan_gain for nd in self.nodes])
        self.power_max = np.array([nd.heater_power_max for nd in self.nodes])
        self.self_heating = np.array([nd.self_heating for nd in self.nodes])
        # last slot holds the room temperature so sources index one array
        self._extended = np.append(np.array([nd.temperature for nd in self.nodes], dtype=float), 0.0)
        self.temperatures = self._extended[:n]

        self._check_stability()
        self._bank = PiBank([lp.preset(sense(sensor, self.temperatures[self._loop_node[i]], 0.0))
                             for i, lp in enumerate(self.loops)])
        self._noise = np.empty((0, len(self.loops)))
        self._noise_pos = 0
        self._flow = np.empty(n)
        self._coupling_now = self.coupling.copy()
        self._heat_now = np.zeros(n)
        self._duties_now = self._hold.copy()
        self.step_index = 0

    def _node_index(self, node_id: str) -> int:
        if node_id not in self._index:
            raise ConfigurationError(ERROR_UNKNOWN_REFERENCE.format(kind="node_id", name=node_id))
        return self._index[node_id]

    def _check_stability(self) -> None:
        fan_max = np.zeros(len(self.nodes))
        for i, lp in enumerate(self.loops):
            if lp.actuator == Actuator.FAN:
                fan_max[self._loop_node[i]] = lp.duty_max
        for i, node in enumerate(self.nodes):
            check_time_step(node, self.dt, node.ambient_coupling * (1.0 + node.fan_gain * fan_max[i]))

    def _next_noise(self) -> np.ndarray:
        if self._noise_pos >= len(self._noise):
            self._noise = self.rng.standard_normal((NOISE_BLOCK_STEPS, len(self.loops)))
            self._noise_pos = 0
        row = self._noise[self._noise_pos]
        self._noise_pos += 1
        return row

    def _duties(self) -> np.ndarray:
        if not self.control:
            return self._hold
        draw = self._next_noise()
        measured = quantize(self.sensor, self.temperatures[self._loop_node] + self.sensor.noise_sigma * draw)
        return self._bank.update(measured, self.control_period)

    def _actuate(self, duties: np.ndarray) -> None:
        n = len(self.nodes)
        heater_duty = np.zeros(n)
        fan_duty = np.zeros(n)
        heater_duty[self._loop_node[self._heater]] = duties[self._heater]
        fan_duty[self._loop_node[~self._heater]] = duties[~self._heater]
        self._coupling_now = self.coupling * (1.0 + self.fan_gain * fan_duty)
        self._heat_now = heater_duty * self.power_max
        self._duties_now = duties

    def step(self) -> np.ndarray:
        """Advance one dt; returns the duty of each loop applied during the step."""
        if self.step_index % self.control_every == 0:
            self._actuate(self._duties())
        self._extended[-1] = ambient_at(self.ambient, self.step_index * self.dt)
        flow = self._flow
        np.take(self._extended, self._source, out=flow)
        np.subtract(flow, self.temperatures, out=flow)
        np.multiply(flow, self._coupling_now, out=flow)
        np.add(flow, self._heat_now, out=flow)
        np.add(flow, self.self_heating, out=flow)
        np.multiply(flow, self.dt, out=flow)
        np.divide(flow, self.capacity, out=flow)
        np.add(self.temperatures, flow, out=self.temperatures)
        self.step_index += 1
        return self._duties_now

    def run(self, sample_steps: np.ndarray, trace_every: int = 0, trace_from: int = 0) -> NetworkRun:
        """
        Simulate until the last requested sample.

        Args:
            sample_steps: Non-decreasing step indices at which to sample node temperatures
            trace_every: Steps between trace rows (0 disables the trace)
            trace_from: First step index eligible for the trace

        Returns:
            NetworkRun with sampled temperatures and the decimated trace
        """
        sample_steps = np.asarray(sample_steps, dtype=np.int64)
        n = len(self.nodes)
        samples = np.empty((len(sample_steps), n))
        trace_t: List[float] = []
        trace_T: List[np.ndarray] = []
        trace_d: List[np.ndarray] = []
        loop_nodes = self._loop_node
        wanted = sample_steps.tolist()
        last = wanted[-1] if wanted else 0
        k = 0

        logger.info("thermal_run_started", nodes=n, loops=len(self.loops), steps=last,
                    control=self.control, control_every=self.control_every)
        while True:
            while k < len(wanted) and wanted[k] == self.step_index:
                samples[k] = self.temperatures
                k += 1
            if self.step_index >= last:
                break
            recording = trace_every and self.step_index >= trace_from and (self.step_index - trace_from) % trace_every == 0
            if recording:
                temps_now = self.temperatures.copy()
            duties = self.step()
            if recording:
                per_node = np.full(n, np.nan)
                per_node[loop_nodes] = duties
                trace_t.append((self.step_index - 1) * self.dt)
                trace_T.append(temps_now)
                trace_d.append(per_node)

        logger.info("thermal_run_finished", steps=self.step_index)
        return NetworkRun(
            node_ids=list(self.node_ids),
            samples=samples,
            trace_times=np.array(trace_t),
            trace_temperatures=np.array(trace_T).reshape(len(trace_t), n),
            trace_duties=np.array(trace_d).reshape(len(trace_t), n),
        )
