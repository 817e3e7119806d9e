"""
Pydantic schemas for scenario files and run artifacts.
Field-level checks live here; cross-reference checks are in scenario_loader.
"""

from datetime import datetime
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.constants import (
    DEFAULT_ADC_BITS,
    DEFAULT_AMBIENT_PERIOD,
    DEFAULT_CARRIER,
    DEFAULT_CHANNELS_PER_UNIT,
    DEFAULT_COMPENSATOR_GAIN,
    DEFAULT_DISCIPLINE_INTERVAL,
    DEFAULT_FULL_SCALE_DBM,
    DEFAULT_GUARD_FRACTION,
    DEFAULT_PULSE_DURATION,
    DEFAULT_PULSE_GAP,
    DEFAULT_ROUND_PERIOD,
    DEFAULT_SAMPLE_RATE,
    DEFAULT_THERMAL_DT,
    DEFAULT_TOTAL_DURATION,
    DEFAULT_TRACE_INTERVAL,
    DEFAULT_UNITS,
    DEFAULT_WARMUP,
    SAMPLE_RATE_RANGE,
)


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)


# ============== Thermal Schemas ==============

class AmbientConfig(StrictModel):
    """Room-temperature disturbance."""
    mean: float = Field(..., description="Mean room temperature, degC")
    amplitude: float = Field(0.0, ge=0, description="Sinusoid amplitude, degC")
    period: float = Field(DEFAULT_AMBIENT_PERIOD, gt=0, description="Sinusoid period, s")
    waveform: Literal["sinusoid", "recorded-trace"] = Field("sinusoid", description="Disturbance shape")
    trace_times: List[float] = Field(default_factory=list, description="Recorded trace sample times, s")
    trace_values: List[float] = Field(default_factory=list, description="Recorded trace temperatures, degC")


class SensorConfig(StrictModel):
    adc_bits: int = Field(DEFAULT_ADC_BITS, ge=1, le=24, description="ADC resolution")
    full_scale_low: float = Field(0.0, description="Temperature at code 0, degC")
    full_scale_high: float = Field(100.0, description="Temperature at the top code, degC")
    noise_sigma: float = Field(0.0, ge=0, description="Thermistor noise std, degC")


class NodeConfig(StrictModel):
    node_id: str = Field(..., min_length=1)
    temperature: float = Field(..., description="Initial temperature, degC")
    heat_capacity: float = Field(..., gt=0, description="J/degC")
    ambient_coupling: float = Field(..., gt=0, description="W/degC to its ambient source")
    heater_power_max: float = Field(0.0, ge=0, description="Heater power at duty 1, W")
    self_heating: float = Field(0.0, description="Constant dissipation, W")
    fan_gain: float = Field(0.0, ge=0, description="Relative conductance increase at fan duty 1")
    ambient_source: str = Field("room", description="'room' or the node_id this node couples to")


class LoopConfig(StrictModel):
    loop_id: str = Field(..., min_length=1)
    node_id: str = Field(..., description="Node sensed and actuated")
    actuator: Literal["heater", "fan"] = "heater"
    polarity: Literal["heating", "cooling"] = "heating"
    setpoint: float = Field(..., description="degC")
    kp: float = Field(..., ge=0, description="Duty per degC")
    ki: float = Field(..., ge=0, description="Duty per degC*s")
    duty_min: float = Field(0.0, ge=0, le=1)
    duty_max: float = Field(1.0, ge=0, le=1)
    hold_duty: float = Field(0.5, ge=0, le=1, description="Duty with control off and bumpless start value")


class ThermalConfig(StrictModel):
    dt: float = Field(DEFAULT_THERMAL_DT, gt=0, description="Thermal time step, s")
    control_period: Optional[float] = Field(None, gt=0, description="PI update interval, s; a multiple of dt (defaults to dt)")
    warmup: float = Field(DEFAULT_WARMUP, ge=0, description="Simulated settling time before the first round, s")
    trace_interval: float = Field(DEFAULT_TRACE_INTERVAL, ge=0, description="Trace decimation, s (0 disables)")
    sensor: SensorConfig = Field(default_factory=SensorConfig)
    nodes: List[NodeConfig] = Field(..., min_length=1)
    loops: List[LoopConfig] = Field(default_factory=list)


# ============== Coupling / RF Schemas ==============

class SensitivityConfig(StrictModel):
    device_id: str = Field(..., min_length=1)
    kind: Literal["amplifier", "pll", "mixer", "passive"]
    node_id: Optional[str] = Field(None, description="Thermal node followed; defaults to device_id")
    amp_coeff: float = Field(0.0, description="Fractional gain change per degC")
    phase_coeff: float = Field(0.0, description="Degrees per degC")
    reference_temp: float = Field(25.0, description="Temperature of zero perturbation, degC")


class LocalOscillatorConfig(StrictModel):
    lo_id: str = Field(..., min_length=1)
    frequency: float = Field(..., gt=0, description="Hz")
    phase: float = Field(0.0, description="Free-running phase offset, degrees")
    pll_device: Optional[str] = Field(None, description="Device whose temperature perturbs this LO")


class SignalPathConfig(StrictModel):
    unit: int = Field(..., ge=0)
    ch: int = Field(..., ge=0)
    port_kind: Literal["ctrl", "rout", "pump", "rin", "monitor"]
    nco_freq: float = Field(..., ge=0, description="Hz")
    lo_binding: Optional[str] = None
    device_bindings: List[str] = Field(default_factory=list)
    baseline_gain: float = Field(1.0, gt=0)
    baseline_phase: float = Field(0.0, description="Degrees")
    measured: bool = Field(False, description="Emits a pulse in the stability campaign")


class CapturePathRef(StrictModel):
    unit: int = Field(..., ge=0)
    port_kind: Literal["rin", "monitor"] = "monitor"
    ch: int = Field(0, ge=0)


class MeasurementConfig(StrictModel):
    units: int = Field(DEFAULT_UNITS, ge=1)
    channels_per_unit: int = Field(DEFAULT_CHANNELS_PER_UNIT, ge=1)
    pulse_duration: float = Field(DEFAULT_PULSE_DURATION, gt=0)
    pulse_gap: float = Field(DEFAULT_PULSE_GAP, ge=0)
    round_period: float = Field(DEFAULT_ROUND_PERIOD, gt=0)
    total_duration: float = Field(DEFAULT_TOTAL_DURATION, gt=0)
    carrier: float = Field(DEFAULT_CARRIER, gt=0)
    sample_rate: float = Field(DEFAULT_SAMPLE_RATE, ge=SAMPLE_RATE_RANGE[0], le=SAMPLE_RATE_RANGE[1])
    guard_fraction: float = Field(DEFAULT_GUARD_FRACTION, ge=0, lt=0.5)
    demod_freq: float = Field(0.0, ge=0, description="Digital demodulation frequency, Hz")
    capture_path: CapturePathRef
    noise_density_dbm_per_hz: Optional[float] = Field(None, description="White noise floor; null disables")
    full_scale_dbm: float = Field(DEFAULT_FULL_SCALE_DBM)


class ClockConfig(StrictModel):
    reference_offset: float = Field(0.0, description="Fractional offset of the 10 MHz reference")
    unit_offsets: List[float] = Field(default_factory=list, description="Fractional offset per unit")
    reset_epochs: List[float] = Field(default_factory=list, description="Counter reset time per unit, s")
    compensator_gain: float = Field(DEFAULT_COMPENSATOR_GAIN, gt=0, le=1)
    compensator_resolution: float = Field(0.0, ge=0)
    ocxo_initial_offset: float = Field(1e-8)
    discipline_interval: float = Field(DEFAULT_DISCIPLINE_INTERVAL, gt=0, description="s")
    discipline_iterations: int = Field(100, ge=1)
    report_interval: float = Field(3600.0, gt=0, description="Skew report spacing, s")
    distributors: List[Literal["primary", "secondary"]] = Field(default_factory=lambda: ["primary", "secondary"])


# ============== Scenario ==============

class Scenario(StrictModel):
    """One experiment: hardware, disturbance, protocol and seeds."""
    name: str = Field(..., min_length=1)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    ambient: AmbientConfig
    thermal: ThermalConfig
    sensitivities: List[SensitivityConfig] = Field(default_factory=list)
    local_oscillators: List[LocalOscillatorConfig] = Field(default_factory=list)
    signal_paths: List[SignalPathConfig] = Field(..., min_length=1)
    measurement: MeasurementConfig
    clock: ClockConfig = Field(default_factory=ClockConfig)
    output_dir: Optional[str] = None


# ============== Run Artifacts ==============

class RunManifest(BaseModel):
    """Written before results and rewritten when the run ends."""
    scenario_name: str
    scenario_hash: str
    seed: int
    control_mode: str
    software_version: str
    command: str = "run"
    total_duration: float
    started_at: datetime
    finished_at: Optional[datetime] = None
    status: str
    outputs: List[str] = Field(default_factory=list)
    error: Optional[str] = None


class FidelityRow(BaseModel):
    unit: int
    channel: int
    amp_infidelity: float
    amp_infidelity_small: float
    phase_infidelity: float
    phase_infidelity_small: float
    amp_infidelity_series: Optional[float] = None
    phase_infidelity_series: Optional[float] = None
    over_budget: bool


class CalibrationRow(BaseModel):
    device_id: str
    amp_coeff: float
    phase_coeff: float
