"""
Average gate fidelity of single-qubit gates under coherent errors.

Rotations follow exp(-i (theta/2) n.sigma), so a pi/2 pulse is theta = pi/2.
Two error models are provided: over/under-rotation by a fractional amount
epsilon (delta_theta = (pi/2) * epsilon) and misalignment of the rotation
axis by phi within the XY plane. Each returns the exact infidelity and its
small-angle approximation.
"""

import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from src.constants import ERROR_NOT_UNITARY
from src.exceptions import ConfigurationError, UnitaryError
from src.services.analysis import ChannelSeries, StabilityStats, normalize_amplitude, unwrap_phase

UNITARY_TOLERANCE = 1e-12

IDENTITY_2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)


@dataclass(frozen=True, eq=False)
class SingleQubitUnitary:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise UnitaryError(f"expected a 2x2 matrix, got shape {m.shape}")
        if not np.allclose(m.conj().T @ m, IDENTITY_2, rtol=0.0, atol=UNITARY_TOLERANCE):
            raise UnitaryError(ERROR_NOT_UNITARY.format(tolerance=UNITARY_TOLERANCE))
        if abs(abs(np.linalg.det(m)) - 1.0) > UNITARY_TOLERANCE:
            raise UnitaryError(ERROR_NOT_UNITARY.format(tolerance=UNITARY_TOLERANCE))
        object.__setattr__(self, "matrix", m)

    def dagger(self) -> np.ndarray:
        return self.matrix.conj().T


@dataclass(frozen=True)
class GateErrorModel:
    epsilon: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and math.isfinite(self.phi)):
            raise ConfigurationError("epsilon and phi must be finite")

    @property
    def delta_theta(self) -> float:
        return 0.5 * math.pi * self.epsilon


@dataclass(frozen=True)
class InfidelityResult:
    exact: float
    small_angle: float


def avg_fidelity(u: SingleQubitUnitary, v: SingleQubitUnitary) -> float:
    """(|Tr(U^dagger V)|^2 + d) / (d^2 + d) with d = 2."""
    overlap = np.trace(u.dagger() @ v.matrix)
    return float((abs(overlap) ** 2 + 2.0) / 6.0)


def _rotation(theta: float, axis: np.ndarray) -> SingleQubitUnitary:
    return SingleQubitUnitary(math.cos(theta / 2.0) * IDENTITY_2 - 1j * math.sin(theta / 2.0) * axis)


def x_rotation(theta: float) -> SingleQubitUnitary:
    """exp(-i theta/2 X)."""
    return _rotation(theta, PAULI_X)


def xy_axis_rotation(theta: float, phi: float) -> SingleQubitUnitary:
    """Rotation by theta about cos(phi) X + sin(phi) Y."""
    if phi == 0.0:
        return x_rotation(theta)
    return _rotation(theta, math.cos(phi) * PAULI_X + math.sin(phi) * PAULI_Y)


def amp_error_infidelity(epsilon: float) -> InfidelityResult:
    """
    Infidelity of a pi/2 rotation over-rotated by the fraction epsilon.

    exact = (2/3) sin^2(dtheta/2), small_angle = dtheta^2 / 6, dtheta = (pi/2) epsilon.
    """
    delta = GateErrorModel(epsilon=epsilon).delta_theta
    return InfidelityResult(
        exact=(2.0 / 3.0) * math.sin(delta / 2.0) ** 2,
        small_angle=delta ** 2 / 6.0,
    )


def _phase_infidelity(phi):
    half = np.asarray(phi, dtype=float) / 2.0
    value = (2.0 / 3.0) * np.sin(half) ** 2 * (1.0 + np.cos(half) ** 2)
    return float(value) if value.ndim == 0 else value


def phase_error_infidelity(phi: float) -> InfidelityResult:
    """
    Infidelity of a pi/2 rotation whose axis is tilted by phi radians.

    exact = (2/3) sin^2(phi/2) (1 + cos^2(phi/2)), which equals
    (2/3)(1 - cos^4(phi/2)) without cancelling at small phi.
    small_angle = phi^2 / 3.
    """
    GateErrorModel(phi=phi)
    return InfidelityResult(
        exact=_phase_infidelity(phi),
        small_angle=phi ** 2 / 3.0,
    )


def infidelity_from_stats(stats: StabilityStats) -> Tuple[InfidelityResult, InfidelityResult]:
    """Use the measured std devs directly as coherent error magnitudes."""
    epsilon = stats.amp_std_pct / 100.0
    phi = math.radians(stats.phase_std_deg)
    return amp_error_infidelity(epsilon), phase_error_infidelity(phi)


def series_infidelity(series: ChannelSeries) -> Tuple[float, float]:
    """
    Exact infidelity averaged over the per-pulse errors of a series.

    Each pulse contributes epsilon = normalized amplitude - 1 and phi = its
    phase deviation from the series mean.

    Returns:
        (mean amplitude-error infidelity, mean phase-error infidelity)
    """
    epsilon = normalize_amplitude(series).amplitudes - 1.0
    phases = unwrap_phase(series.phases)
    phi = np.deg2rad(phases - phases.mean())
    amp = (2.0 / 3.0) * np.sin(0.25 * math.pi * epsilon) ** 2
    phase = _phase_infidelity(phi)
    return float(amp.mean()), float(phase.mean())


def worst_case(results: Iterable[Tuple[InfidelityResult, InfidelityResult]]) -> Tuple[float, float]:
    results = list(results)
    return (
        max((amp.exact for amp, _ in results), default=0.0),
        max((phase.exact for _, phase in results), default=0.0),
    )
