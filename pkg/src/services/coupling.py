"""
Temperature-to-RF coupling.

Each device has linear small-signal coefficients: a fractional gain change
per degC and a phase shift in degrees per degC, relative to a reference
temperature. A path's perturbation is the product of its device gains and
the sum of its device phases.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from src.constants import (
    ERROR_AMPLIFIER_PHASE,
    ERROR_GAIN_NONPOSITIVE,
    ERROR_TEMPERATURE_NOT_FINITE,
)
from src.exceptions import CouplingError
from src.models.registry import device_allows_phase_coupling


class DeviceKind(str, Enum):
    AMPLIFIER = "amplifier"
    PLL = "pll"
    MIXER = "mixer"
    PASSIVE = "passive"


@dataclass(frozen=True)
class DeviceSensitivity:
    """Temperature coefficients of one device; node_id names the thermal node it follows."""
    device_id: str
    kind: DeviceKind
    amp_coeff: float = 0.0
    phase_coeff: float = 0.0
    reference_temp: float = 25.0
    node_id: Optional[str] = None

    def __post_init__(self):
        if self.phase_coeff != 0.0 and not device_allows_phase_coupling(DeviceKind(self.kind).value):
            raise CouplingError(ERROR_AMPLIFIER_PHASE.format(device_id=self.device_id, phase_coeff=self.phase_coeff))

    @property
    def thermal_node(self) -> str:
        return self.node_id or self.device_id

    def scaled(self, amp_scale: float = 1.0, phase_scale: float = 1.0) -> "DeviceSensitivity":
        return replace(self, amp_coeff=self.amp_coeff * amp_scale, phase_coeff=self.phase_coeff * phase_scale)


@dataclass(frozen=True)
class PathPerturbation:
    gain_multiplier: float = 1.0
    phase_offset: float = 0.0

    def __post_init__(self):
        if not self.gain_multiplier > 0:
            raise CouplingError(ERROR_GAIN_NONPOSITIVE.format(gain=self.gain_multiplier))

    def then(self, other: "PathPerturbation") -> "PathPerturbation":
        """Cascade two stages: gains multiply, phases add."""
        return PathPerturbation(self.gain_multiplier * other.gain_multiplier, self.phase_offset + other.phase_offset)


IDENTITY = PathPerturbation()


def perturbation_for(path_devices: Iterable[Tuple[DeviceSensitivity, float]]) -> PathPerturbation:
    """
    Gain and phase perturbation of a path from its device temperatures.

    Devices are folded in device_id order so the result does not depend on
    how the list was assembled.

    Args:
        path_devices: (sensitivity, current temperature) pairs

    Returns:
        PathPerturbation with gain = prod(1 + a*dT) and phase = sum(p*dT)

    Raises:
        CouplingError: Non-finite temperature or gain <= 0
    """
    ordered = sorted(path_devices, key=lambda item: (item[0].device_id, item[1]))
    gain_terms = []
    phase_terms = []
    for sensitivity, temperature in ordered:
        if not math.isfinite(temperature):
            raise CouplingError(ERROR_TEMPERATURE_NOT_FINITE.format(device_id=sensitivity.device_id))
        delta = temperature - sensitivity.reference_temp
        gain_terms.append(1.0 + sensitivity.amp_coeff * delta)
        phase_terms.append(sensitivity.phase_coeff * delta)
    gain = math.prod(gain_terms)
    if gain <= 0:
        raise CouplingError(ERROR_GAIN_NONPOSITIVE.format(gain=gain))
    return PathPerturbation(gain_multiplier=gain, phase_offset=math.fsum(phase_terms))


def perturbation_arrays(
    sensitivities: Sequence[DeviceSensitivity],
    temperatures: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized perturbation_for over a time series.

    Args:
        sensitivities: Devices on the path
        temperatures: (n_samples, n_devices) temperatures, columns matching sensitivities

    Returns:
        (gain, phase) arrays of length n_samples

    Raises:
        CouplingError: Non-finite temperature or any gain <= 0
    """
    temps = np.asarray(temperatures, dtype=float)
    if temps.ndim == 1:
        temps = temps[:, np.newaxis]
    if not sensitivities:
        return np.ones(len(temps)), np.zeros(len(temps))
    if not np.all(np.isfinite(temps)):
        bad = int(np.argwhere(~np.isfinite(temps))[0][1])
        raise CouplingError(ERROR_TEMPERATURE_NOT_FINITE.format(device_id=sensitivities[bad].device_id))
    order = sorted(range(len(sensitivities)), key=lambda i: sensitivities[i].device_id)
    amp = np.array([sensitivities[i].amp_coeff for i in order])
    phase = np.array([sensitivities[i].phase_coeff for i in order])
    reference = np.array([sensitivities[i].reference_temp for i in order])
    delta = temps[:, order] - reference
    gain = np.prod(1.0 + amp * delta, axis=1)
    if np.any(gain <= 0):
        raise CouplingError(ERROR_GAIN_NONPOSITIVE.format(gain=float(gain.min())))
    return gain, np.sum(phase * delta, axis=1)
