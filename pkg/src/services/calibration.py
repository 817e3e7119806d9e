"""
Sensitivity calibration.

Finds one scale factor for all amplitude coefficients and one for all phase
coefficients so that the channel-mean standard deviations of a control-on
campaign hit the targets. The temperature history is simulated once; each
trial scale is evaluated on the noise-free capture of that history, then
solved by bisection.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.optimize import bisect

from src.constants import (
    CALIBRATION_MAX_BRACKET_DOUBLINGS,
    CALIBRATION_MAX_ITERATIONS,
    CALIBRATION_TARGET_AMP_STD_PCT,
    CALIBRATION_TARGET_PHASE_STD_DEG,
    CALIBRATION_XTOL,
    CONTROL_ON,
    ERROR_CALIBRATION_DIVERGED,
)
from src.exceptions import CalibrationError, SimulatorError
from src.services.analysis import ChannelSeries, StabilityStats, compute_stats, unwrap_phase
from src.services.coupling import DeviceSensitivity
from src.services.schedule_capture import (
    CampaignSetup,
    ThermalHistory,
    noise_free_capture,
    path_response,
    round_start_samples,
    simulate_thermal,
)
from src.utils.logging import get_logger

logger = get_logger("calibration")


@dataclass(frozen=True)
class CalibrationTargets:
    amp_std_pct: float = CALIBRATION_TARGET_AMP_STD_PCT
    phase_std_deg: float = CALIBRATION_TARGET_PHASE_STD_DEG


@dataclass
class CalibrationResult:
    sensitivities: Dict[str, DeviceSensitivity]
    amp_scale: float
    phase_scale: float
    achieved_amp_std_pct: float
    achieved_phase_std_deg: float
    stats: List[StabilityStats]

    def coefficients(self) -> List[DeviceSensitivity]:
        return [self.sensitivities[key] for key in sorted(self.sensitivities)]


def scale_sensitivities(sensitivities: Dict[str, DeviceSensitivity], amp_scale: float, phase_scale: float) -> Dict[str, DeviceSensitivity]:
    return {key: s.scaled(amp_scale, phase_scale) for key, s in sensitivities.items()}


def noise_free_stats(setup: CampaignSetup, history: ThermalHistory,
                     sensitivities: Optional[Dict[str, DeviceSensitivity]] = None) -> List[StabilityStats]:
    """Per-channel statistics of the noise-free capture over a fixed temperature history."""
    response = path_response(setup, history, sensitivities)
    amplitude, phase = noise_free_capture(setup, response)
    n_rounds = amplitude.shape[1]
    starts = round_start_samples(setup.plan, n_rounds)
    stats = []
    for c, path in enumerate(setup.channels):
        offset = setup.plan.slot_of(path.channel_id) * setup.plan.slot_samples
        timestamps = (starts + offset) / setup.plan.sample_rate
        stats.append(compute_stats(ChannelSeries(path.channel_id, timestamps, amplitude[c], unwrap_phase(phase[c]))))
    return stats


def _mean_metric(stats: List[StabilityStats], metric: str) -> float:
    return float(np.mean([s.metric(metric) for s in stats]))


def _solve_scale(objective: Callable[[float], float], quantity: str, max_iterations: int) -> float:
    """Root of objective(scale) on [0, hi]; hi doubles until the objective turns positive."""
    low_value = objective(0.0)
    if low_value >= 0:
        return 0.0
    high = 1.0
    for _ in range(CALIBRATION_MAX_BRACKET_DOUBLINGS):
        if objective(high) > 0:
            break
        high *= 2.0
    else:
        residual = objective(high)
        raise CalibrationError(
            ERROR_CALIBRATION_DIVERGED.format(quantity=quantity, iterations=CALIBRATION_MAX_BRACKET_DOUBLINGS, residual=residual),
            residual=residual,
        )
    root, info = bisect(objective, 0.0, high, xtol=CALIBRATION_XTOL * high, maxiter=max_iterations,
                        full_output=True, disp=False)
    if not info.converged:
        residual = objective(root)
        raise CalibrationError(
            ERROR_CALIBRATION_DIVERGED.format(quantity=quantity, iterations=info.iterations, residual=residual),
            residual=residual,
        )
    logger.info("calibration_converged", quantity=quantity, scale=root, iterations=info.iterations)
    return root


def calibrate_sensitivities(
    setup: CampaignSetup,
    targets: CalibrationTargets = CalibrationTargets(),
    seed: int = 0,
    max_iterations: int = CALIBRATION_MAX_ITERATIONS,
    history: Optional[ThermalHistory] = None,
) -> CalibrationResult:
    """
    Scale seed coefficients so control-on channel-mean std devs match the targets.

    Args:
        setup: Resolved scenario whose coefficients are the seed
        targets: Channel-mean amplitude std (%) and phase std (deg)
        seed: Root seed of the thermal simulation
        max_iterations: Bisection iteration cap
        history: Precomputed control-on temperature history

    Returns:
        CalibrationResult with the scaled coefficients

    Raises:
        CalibrationError: Bracketing or bisection failed; carries the residual
    """
    if history is None:
        thermal_seed, _ = np.random.SeedSequence(seed).spawn(2)
        history = simulate_thermal(setup, CONTROL_ON, np.random.default_rng(thermal_seed), setup.plan.n_rounds)
    base = setup.sensitivities

    def objective(metric: str, target: float, make: Callable[[float], Dict[str, DeviceSensitivity]]):
        def evaluate(scale: float) -> float:
            try:
                stats = noise_free_stats(setup, history, make(scale))
            except SimulatorError:
                # gain left the small-signal regime: scale is too large
                return max(target, 1.0)
            return _mean_metric(stats, metric) - target
        return evaluate

    amp_scale = _solve_scale(
        objective("amp_std_pct", targets.amp_std_pct, lambda s: scale_sensitivities(base, s, 0.0)),
        "amplitude", max_iterations,
    )
    phase_scale = _solve_scale(
        objective("phase_std_deg", targets.phase_std_deg, lambda s: scale_sensitivities(base, 0.0, s)),
        "phase", max_iterations,
    )
    calibrated = scale_sensitivities(base, amp_scale, phase_scale)
    stats = noise_free_stats(setup, history, calibrated)
    result = CalibrationResult(
        sensitivities=calibrated,
        amp_scale=amp_scale,
        phase_scale=phase_scale,
        achieved_amp_std_pct=_mean_metric(stats, "amp_std_pct"),
        achieved_phase_std_deg=_mean_metric(stats, "phase_std_deg"),
        stats=stats,
    )
    logger.info(
        "calibration_finished",
        amp_scale=amp_scale,
        phase_scale=phase_scale,
        amp_std_pct=result.achieved_amp_std_pct,
        phase_std_deg=result.achieved_phase_std_deg,
    )
    return result
