"""
Scenario loading, validation and resolution into domain objects.

Validation is total: YAML syntax errors report line and column, schema and
cross-reference errors are all collected and raised together, each prefixed
with the config path it concerns.
"""

import hashlib
import json
from collections import Counter
from pathlib import Path
from typing import Dict, List, Optional, Union

import yaml
from pydantic import ValidationError

from src.constants import AMBIENT_ROOM
from src.exceptions import ConfigurationError, ScenarioParseError
from src.models.registry import get_rf_range, is_capture_port, port_requires_lo
from src.models.schemas import Scenario, SignalPathConfig
from src.services.coupling import DeviceKind, DeviceSensitivity
from src.services.rfchain import ChannelId, LoState, PortKind, SignalPath
from src.services.schedule_capture import CampaignSetup, MeasurementPlan
from src.services.thermal import (
    Actuator,
    AmbientProfile,
    PiLoop,
    Polarity,
    SensorModel,
    ThermalNode,
    Waveform,
    control_steps,
)
from src.utils.logging import get_logger
from src.utils.phase import aliases_to_dc

logger = get_logger("scenario_loader")


def _format_loc(loc) -> str:
    path = ""
    for part in loc:
        if isinstance(part, int):
            path += f"[{part}]"
        else:
            path += f".{part}" if path else str(part)
    return path or "<root>"


def _read_yaml(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read scenario '{path}': {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        problem = getattr(exc, "problem", None) or str(exc)
        if mark is not None:
            raise ScenarioParseError(problem, line=mark.line + 1, column=mark.column + 1) from exc
        raise ScenarioParseError(problem) from exc
    if not isinstance(data, dict):
        raise ConfigurationError("scenario file must contain a mapping at the top level")
    return data


def parse_scenario(data: dict) -> Scenario:
    """
    Validate a scenario mapping.

    Raises:
        ConfigurationError: With every schema and cross-reference diagnostic
    """
    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as exc:
        diagnostics = [f"{_format_loc(err['loc'])}: {err['msg']}" for err in exc.errors()]
        raise ConfigurationError(f"scenario has {len(diagnostics)} error(s)", diagnostics) from exc
    diagnostics = validate_semantics(scenario)
    if diagnostics:
        raise ConfigurationError(f"scenario has {len(diagnostics)} error(s)", diagnostics)
    return scenario


def load_scenario(path: Union[str, Path], duration: Optional[float] = None) -> Scenario:
    """
    Load and fully validate a scenario file.

    Args:
        path: YAML scenario file
        duration: Optional override of measurement.total_duration, s

    Returns:
        Validated Scenario

    Raises:
        ScenarioParseError: YAML syntax error (with line/column)
        ConfigurationError: Schema or semantic errors, all of them
    """
    path = Path(path)
    data = _read_yaml(path)
    if duration is not None:
        if not duration > 0:
            raise ConfigurationError(f"--duration must be > 0, got {duration}")
        measurement = data.get("measurement")
        if isinstance(measurement, dict):
            data["measurement"] = {**measurement, "total_duration": duration}
    try:
        scenario = parse_scenario(data)
    except ConfigurationError as exc:
        logger.warning("scenario_invalid", path=str(path), errors=len(exc.diagnostics))
        raise
    logger.info("scenario_loaded", path=str(path), name=scenario.name, hash=scenario_hash(scenario)[:12])
    return scenario


def scenario_hash(scenario: Scenario) -> str:
    """SHA-256 of the canonical JSON form of the scenario."""
    canonical = json.dumps(scenario.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def dump_scenario(scenario: Scenario, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(yaml.safe_dump(scenario.model_dump(mode="json"), sort_keys=False), encoding="utf-8")
    return path


def _duplicates(values: List) -> List:
    return [value for value, count in Counter(values).items() if count > 1]


def _plan_from(scenario: Scenario) -> MeasurementPlan:
    m = scenario.measurement
    return MeasurementPlan(
        units=m.units,
        channels_per_unit=m.channels_per_unit,
        pulse_duration=m.pulse_duration,
        pulse_gap=m.pulse_gap,
        round_period=m.round_period,
        total_duration=m.total_duration,
        carrier=m.carrier,
        sample_rate=m.sample_rate,
        guard_fraction=m.guard_fraction,
        demod_freq=m.demod_freq,
    )


def _path_rf(path: SignalPathConfig, lo_freqs: Dict[str, float]) -> float:
    if path.lo_binding and path.lo_binding in lo_freqs:
        return path.nco_freq + lo_freqs[path.lo_binding]
    return path.nco_freq


def find_capture_path(scenario: Scenario) -> List[int]:
    ref = scenario.measurement.capture_path
    return [
        i for i, p in enumerate(scenario.signal_paths)
        if p.unit == ref.unit and p.port_kind == ref.port_kind and p.ch == ref.ch
    ]


def validate_semantics(scenario: Scenario) -> List[str]:
    """Cross-reference and physical-consistency checks; returns every problem found."""
    errors: List[str] = []
    thermal = scenario.thermal
    m = scenario.measurement

    # thermal
    node_ids = [n.node_id for n in thermal.nodes]
    for dup in _duplicates(node_ids):
        errors.append(f"thermal.nodes: duplicate node_id '{dup}'")
    nodes = {n.node_id: n for n in thermal.nodes}
    for i, node in enumerate(thermal.nodes):
        if node.ambient_source != AMBIENT_ROOM and node.ambient_source not in nodes:
            errors.append(f"thermal.nodes[{i}].ambient_source: unknown node '{node.ambient_source}'")
        if node.ambient_source == node.node_id:
            errors.append(f"thermal.nodes[{i}].ambient_source: node cannot couple to itself")
    if thermal.sensor.full_scale_low >= thermal.sensor.full_scale_high:
        errors.append("thermal.sensor: full_scale_low must be below full_scale_high")
    for dup in _duplicates([lp.loop_id for lp in thermal.loops]):
        errors.append(f"thermal.loops: duplicate loop_id '{dup}'")
    for dup in _duplicates([(lp.node_id, lp.actuator) for lp in thermal.loops]):
        errors.append(f"thermal.loops: more than one {dup[1]} loop on node '{dup[0]}'")
    fan_max: Dict[str, float] = {}
    for i, loop in enumerate(thermal.loops):
        where = f"thermal.loops[{i}]"
        if loop.node_id not in nodes:
            errors.append(f"{where}.node_id: unknown node '{loop.node_id}'")
            continue
        if loop.duty_min > loop.duty_max:
            errors.append(f"{where}: duty_min exceeds duty_max")
        elif not loop.duty_min <= loop.hold_duty <= loop.duty_max:
            errors.append(f"{where}.hold_duty: must lie within [duty_min, duty_max]")
        if loop.actuator == "heater" and nodes[loop.node_id].heater_power_max <= 0:
            errors.append(f"{where}: node '{loop.node_id}' has no heater_power_max")
        if loop.actuator == "fan":
            if nodes[loop.node_id].fan_gain <= 0:
                errors.append(f"{where}: node '{loop.node_id}' has no fan_gain")
            fan_max[loop.node_id] = loop.duty_max
    for i, node in enumerate(thermal.nodes):
        coupling = node.ambient_coupling * (1.0 + node.fan_gain * fan_max.get(node.node_id, 0.0))
        max_dt = node.heat_capacity / coupling
        if thermal.dt > max_dt:
            errors.append(f"thermal.dt: {thermal.dt} s exceeds the stability limit {max_dt:.6g} s of node '{node.node_id}'")
    try:
        control_steps(thermal.dt, thermal.control_period)
    except ConfigurationError as exc:
        errors.append(f"thermal.control_period: {exc}")
    if scenario.ambient.waveform == "recorded-trace":
        if len(scenario.ambient.trace_times) < 2:
            errors.append("ambient.trace_times: recorded trace needs at least 2 samples")
        if len(scenario.ambient.trace_times) != len(scenario.ambient.trace_values):
            errors.append("ambient.trace_values: length differs from trace_times")

    # coupling
    sensitivities = {s.device_id: s for s in scenario.sensitivities}
    for dup in _duplicates([s.device_id for s in scenario.sensitivities]):
        errors.append(f"sensitivities: duplicate device_id '{dup}'")
    for i, sens in enumerate(scenario.sensitivities):
        node = sens.node_id or sens.device_id
        if node not in nodes:
            errors.append(f"sensitivities[{i}].node_id: unknown node '{node}' for device '{sens.device_id}'")
        if sens.kind == "amplifier" and sens.phase_coeff != 0.0:
            errors.append(f"sensitivities[{i}].phase_coeff: amplifier '{sens.device_id}' must have phase_coeff = 0")

    # local oscillators
    los = {lo.lo_id: lo for lo in scenario.local_oscillators}
    for dup in _duplicates([lo.lo_id for lo in scenario.local_oscillators]):
        errors.append(f"local_oscillators: duplicate lo_id '{dup}'")
    for i, lo in enumerate(scenario.local_oscillators):
        if lo.pll_device is not None:
            if lo.pll_device not in sensitivities:
                errors.append(f"local_oscillators[{i}].pll_device: unknown device_id '{lo.pll_device}'")
            elif sensitivities[lo.pll_device].kind != "pll":
                errors.append(f"local_oscillators[{i}].pll_device: device '{lo.pll_device}' is not a pll")
        if not aliases_to_dc(lo.frequency, m.sample_rate):
            errors.append(f"local_oscillators[{i}].frequency: {lo.frequency} Hz is not a multiple of the sample rate")

    # signal paths
    lo_freqs = {lo.lo_id: lo.frequency for lo in scenario.local_oscillators}
    for dup in _duplicates([(p.unit, p.ch, p.port_kind) for p in scenario.signal_paths]):
        errors.append(f"signal_paths: duplicate path unit {dup[0]} ch {dup[1]} {dup[2]}")
    trx_lo: Dict[int, Dict[str, str]] = {}
    for i, path in enumerate(scenario.signal_paths):
        where = f"signal_paths[{i}]"
        if path.unit >= m.units:
            errors.append(f"{where}.unit: {path.unit} exceeds measurement.units - 1")
        for j, device_id in enumerate(path.device_bindings):
            if device_id not in sensitivities:
                errors.append(f"{where}.device_bindings[{j}]: unknown device_id '{device_id}'")
        if port_requires_lo(path.port_kind):
            if not path.lo_binding:
                errors.append(f"{where}.lo_binding: {path.port_kind} path needs an LO")
            elif path.lo_binding not in los:
                errors.append(f"{where}.lo_binding: unknown lo_id '{path.lo_binding}'")
        elif path.lo_binding:
            errors.append(f"{where}.lo_binding: ctrl paths are DAC-direct and take no LO")
        if path.port_kind in ("rout", "rin") and path.lo_binding:
            trx_lo.setdefault(path.unit, {})[path.port_kind] = path.lo_binding
        if not aliases_to_dc(path.nco_freq, m.sample_rate):
            errors.append(f"{where}.nco_freq: {path.nco_freq} Hz is not a multiple of the sample rate")
        if not is_capture_port(path.port_kind):
            low, high = get_rf_range(path.port_kind)
            rf = _path_rf(path, lo_freqs)
            if not low <= rf <= high:
                errors.append(f"{where}: RF frequency {rf:.6g} Hz outside the {path.port_kind} range [{low:.3g}, {high:.3g}]")
        if path.measured:
            if is_capture_port(path.port_kind):
                errors.append(f"{where}.measured: input ports cannot emit pulses")
            elif _path_rf(path, lo_freqs) != m.carrier:
                errors.append(f"{where}: measured path RF frequency must equal measurement.carrier")
    for unit, kinds in trx_lo.items():
        if "rout" in kinds and "rin" in kinds and kinds["rout"] != kinds["rin"]:
            errors.append(f"signal_paths: unit {unit} rout and rin must share one LO ('{kinds['rout']}' vs '{kinds['rin']}')")

    measured = [(p.unit, p.ch) for p in scenario.signal_paths if p.measured]
    expected = [(u, k) for u in range(m.units) for k in range(m.channels_per_unit)]
    if sorted(measured) != expected:
        errors.append(
            f"signal_paths: measured paths must cover units x channels_per_unit = {len(expected)} channels "
            f"exactly once, got {len(measured)}"
        )

    capture = find_capture_path(scenario)
    if len(capture) != 1:
        errors.append(f"measurement.capture_path: expected exactly one matching path, found {len(capture)}")
    if not aliases_to_dc(m.demod_freq, m.sample_rate):
        errors.append(f"measurement.demod_freq: {m.demod_freq} Hz is not a multiple of the sample rate")
    try:
        _plan_from(scenario).validate()
    except ConfigurationError as exc:
        errors.append(f"measurement: {exc}")

    # clock
    clock = scenario.clock
    if clock.unit_offsets and len(clock.unit_offsets) != m.units:
        errors.append(f"clock.unit_offsets: expected {m.units} entries, got {len(clock.unit_offsets)}")
    if clock.reset_epochs and len(clock.reset_epochs) != m.units:
        errors.append(f"clock.reset_epochs: expected {m.units} entries, got {len(clock.reset_epochs)}")
    for i, offset in enumerate(clock.unit_offsets):
        if abs(offset) >= 1e-6:
            errors.append(f"clock.unit_offsets[{i}]: |offset| must be < 1e-6")
    for name in ("reference_offset", "ocxo_initial_offset"):
        if abs(getattr(clock, name)) >= 1e-6:
            errors.append(f"clock.{name}: |offset| must be < 1e-6")
    return errors


def _signal_path(p: SignalPathConfig) -> SignalPath:
    return SignalPath(
        channel_id=ChannelId(p.unit, p.ch),
        port_kind=PortKind(p.port_kind),
        nco_freq=p.nco_freq,
        lo_binding=p.lo_binding,
        device_bindings=tuple(p.device_bindings),
        baseline_gain=p.baseline_gain,
        baseline_phase=p.baseline_phase,
    )


def build_sensitivities(scenario: Scenario) -> Dict[str, DeviceSensitivity]:
    return {
        s.device_id: DeviceSensitivity(
            device_id=s.device_id,
            kind=DeviceKind(s.kind),
            amp_coeff=s.amp_coeff,
            phase_coeff=s.phase_coeff,
            reference_temp=s.reference_temp,
            node_id=s.node_id,
        )
        for s in scenario.sensitivities
    }


def build_campaign_setup(scenario: Scenario) -> CampaignSetup:
    """Resolve a validated scenario into the domain objects a campaign runs on."""
    thermal = scenario.thermal
    ambient = scenario.ambient
    capture_index = find_capture_path(scenario)[0]
    channels = sorted(
        (_signal_path(p) for p in scenario.signal_paths if p.measured),
        key=lambda path: path.channel_id,
    )
    return CampaignSetup(
        plan=_plan_from(scenario),
        nodes=[ThermalNode(**node.model_dump()) for node in thermal.nodes],
        loops=[
            PiLoop(
                kp=lp.kp, ki=lp.ki, setpoint=lp.setpoint,
                duty_min=lp.duty_min, duty_max=lp.duty_max,
                polarity=Polarity(lp.polarity), loop_id=lp.loop_id, node_id=lp.node_id,
                actuator=Actuator(lp.actuator), hold_duty=lp.hold_duty,
            )
            for lp in thermal.loops
        ],
        sensor=SensorModel(**thermal.sensor.model_dump()),
        ambient=AmbientProfile(
            mean=ambient.mean,
            amplitude=ambient.amplitude,
            period=ambient.period,
            waveform=Waveform(ambient.waveform),
            trace_times=tuple(ambient.trace_times),
            trace_values=tuple(ambient.trace_values),
        ),
        dt=thermal.dt,
        control_period=thermal.control_period,
        warmup=thermal.warmup,
        trace_interval=thermal.trace_interval,
        sensitivities=build_sensitivities(scenario),
        channels=channels,
        capture_path=_signal_path(scenario.signal_paths[capture_index]),
        local_oscillators={lo.lo_id: LoState(lo.lo_id, lo.frequency, lo.phase) for lo in scenario.local_oscillators},
        lo_devices={lo.lo_id: lo.pll_device for lo in scenario.local_oscillators},
        noise_density=scenario.measurement.noise_density_dbm_per_hz,
        full_scale_dbm=scenario.measurement.full_scale_dbm,
    )


def with_sensitivities(scenario: Scenario, sensitivities: Dict[str, DeviceSensitivity]) -> Scenario:
    """Copy of the scenario with updated coefficients."""
    updated = [
        s.model_copy(update={
            "amp_coeff": sensitivities[s.device_id].amp_coeff,
            "phase_coeff": sensitivities[s.device_id].phase_coeff,
        })
        for s in scenario.sensitivities
    ]
    return scenario.model_copy(update={"sensitivities": updated})
