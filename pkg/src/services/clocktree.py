"""
Clock distribution model.

A 10 MHz reference is multiplied up to 100 MHz and 250 MHz and divided down
to the 62.5 kHz sync clock; every derived clock inherits the reference's
fractional frequency offset. Distributors fan the three clocks out to twelve
channels. A fine-frequency compensator disciplines the local OCXO against a
rubidium reference, and per-unit global time counters count sync ticks.

Frequencies are exact Fractions so clock ratios stay exact.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import List, Mapping, Sequence, Tuple

import numpy as np

from src.constants import (
    CLOCKS_PER_CHANNEL,
    DISTRIBUTOR_CHANNELS,
    ERROR_WRONG_REFERENCE,
    MAX_FRACTIONAL_OFFSET,
    REFERENCE_CLOCK_HZ,
    SYNC_TICK_HZ,
)
from src.exceptions import ConfigurationError
from src.models.registry import SYSTEM_CLOCK_FREQS, is_system_clock_freq
from src.utils.logging import get_logger

logger = get_logger("clocktree")


def exact(value: float) -> Fraction:
    """Decimal-exact Fraction of a float (1e-9 becomes 1/10**9)."""
    return Fraction(str(value))


@dataclass(frozen=True)
class ClockNode:
    node_id: str
    nominal_freq: int
    fractional_offset: float = 0.0
    phase_accum: float = 0.0

    def __post_init__(self):
        if not is_system_clock_freq(self.nominal_freq):
            raise ConfigurationError(f"clock '{self.node_id}': {self.nominal_freq} Hz is not a system clock frequency")
        if abs(self.fractional_offset) >= MAX_FRACTIONAL_OFFSET:
            raise ConfigurationError(f"clock '{self.node_id}': |fractional_offset| must be < {MAX_FRACTIONAL_OFFSET}")

    @property
    def frequency(self) -> Fraction:
        return Fraction(self.nominal_freq) * (1 + exact(self.fractional_offset))


class DistributorKind(str, Enum):
    PRIMARY = "primary"
    SECONDARY = "secondary"


@dataclass(frozen=True)
class DistributorConfig:
    kind: DistributorKind = DistributorKind.PRIMARY
    channels: int = DISTRIBUTOR_CHANNELS
    outputs: int = DISTRIBUTOR_CHANNELS * CLOCKS_PER_CHANNEL

    def __post_init__(self):
        if self.outputs != self.channels * CLOCKS_PER_CHANNEL:
            raise ConfigurationError(
                f"distributor outputs must equal channels x {CLOCKS_PER_CHANNEL}: "
                f"{self.outputs} != {self.channels * CLOCKS_PER_CHANNEL}"
            )


@dataclass(frozen=True)
class GlobalCounter:
    unit_id: int
    count: int = 0
    reset_epoch: float = 0.0

    def __post_init__(self):
        if self.count < 0:
            raise ConfigurationError(f"counter of unit {self.unit_id} must be non-negative")


def derive_clocks(reference: ClockNode) -> Tuple[ClockNode, ClockNode, ClockNode]:
    """
    100 MHz, 250 MHz and 62.5 kHz clocks synthesized from the 10 MHz reference.

    Raises:
        ConfigurationError: Reference is not nominally 10 MHz
    """
    if reference.nominal_freq != REFERENCE_CLOCK_HZ:
        raise ConfigurationError(ERROR_WRONG_REFERENCE.format(expected=REFERENCE_CLOCK_HZ, actual=reference.nominal_freq))
    return tuple(
        ClockNode(f"{reference.node_id}/{name}", SYSTEM_CLOCK_FREQS[name], reference.fractional_offset)
        for name in ("c100M", "c250M", "c62k5")
    )


def distribute(config: DistributorConfig, clocks: Sequence[ClockNode]) -> List[ClockNode]:
    """
    Fan the three clocks out to every channel; outputs are channel-major.

    A secondary distributor is fed from one channel's three outputs of a primary.
    """
    if len(clocks) != CLOCKS_PER_CHANNEL:
        raise ConfigurationError(f"a distributor takes {CLOCKS_PER_CHANNEL} clocks, got {len(clocks)}")
    outputs = [
        replace(clock, node_id=f"{config.kind.value}/ch{channel}/{clock.nominal_freq}")
        for channel in range(config.channels)
        for clock in clocks
    ]
    logger.debug("clocks_distributed", kind=config.kind.value, outputs=len(outputs))
    return outputs


def _check_offset(name: str, value: float) -> None:
    if abs(value) >= MAX_FRACTIONAL_OFFSET:
        raise ConfigurationError(f"|{name}| must be < {MAX_FRACTIONAL_OFFSET}, got {value}")


def quantize_offset(value: float, resolution: float) -> float:
    if resolution <= 0:
        return value
    return round(value / resolution) * resolution


def compensate(ocxo_offset: float, measured_vs_rb: float, gain: float = 0.5, resolution: float = 0.0) -> float:
    """
    One integral correction step of the fine-frequency compensator.

    Args:
        ocxo_offset: Current fractional offset of the OCXO
        measured_vs_rb: Offset measured against the rubidium reference
        gain: Loop gain in (0, 1]
        resolution: Frequency-comparison quantum (0 for ideal measurement)

    Returns:
        Corrected fractional offset
    """
    _check_offset("ocxo_offset", ocxo_offset)
    _check_offset("measured_vs_rb", measured_vs_rb)
    if not 0.0 < gain <= 1.0:
        raise ConfigurationError(f"compensator gain must be in (0, 1], got {gain}")
    return ocxo_offset - gain * quantize_offset(measured_vs_rb, resolution)


def discipline(initial: float, gain: float, iterations: int, resolution: float = 0.0) -> np.ndarray:
    """Residual offset after each periodic compensation, starting with the initial one."""
    residuals = [initial]
    offset = initial
    for _ in range(iterations):
        offset = compensate(offset, offset, gain, resolution)
        residuals.append(offset)
    return np.array(residuals)


def ticks_at(at_time: float, offset: float, reset_epoch: float = 0.0) -> int:
    """Sync ticks counted since reset by a unit with the given fractional offset."""
    elapsed = exact(at_time) - exact(reset_epoch)
    if elapsed <= 0:
        return 0
    return math.floor(SYNC_TICK_HZ * (1 + exact(offset)) * elapsed)


def advance(counter: GlobalCounter, at_time: float, offset: float) -> GlobalCounter:
    """Counter state at at_time; counts never go backwards."""
    return replace(counter, count=max(counter.count, ticks_at(at_time, offset, counter.reset_epoch)))


def counter_skew(counters: Sequence[GlobalCounter], at_time: float, unit_offsets: Mapping[int, float]) -> int:
    """
    Largest pairwise count difference between units at at_time.

    Raises:
        ConfigurationError: Fewer than two counters or a unit without an offset
    """
    if len(counters) < 2:
        raise ConfigurationError("counter skew needs at least two units")
    counts = []
    for counter in counters:
        if counter.unit_id not in unit_offsets:
            raise ConfigurationError(f"no frequency offset for unit {counter.unit_id}")
        counts.append(ticks_at(at_time, unit_offsets[counter.unit_id], counter.reset_epoch))
    return max(counts) - min(counts)


def skew_series(
    counters: Sequence[GlobalCounter],
    unit_offsets: Mapping[int, float],
    times: Sequence[float],
) -> List[Tuple[float, int]]:
    return [(float(t), counter_skew(counters, float(t), unit_offsets)) for t in times]
