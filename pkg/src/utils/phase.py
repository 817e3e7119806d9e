"""
Phase and cycle arithmetic shared by the RF chain and the analysis code.
"""

from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


def wrap_degrees(angle: ArrayLike) -> ArrayLike:
    """Wrap degrees into (-180, 180]."""
    wrapped = angle - 360.0 * np.ceil((np.asarray(angle, dtype=float) - 180.0) / 360.0)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def is_integral(value: float) -> bool:
    return float(value).is_integer()


def aliases_to_dc(freq_hz: float, sample_rate: float) -> bool:
    """True when a tone at freq_hz lands on exactly zero cycles at every sample."""
    return is_integral(freq_hz) and is_integral(sample_rate) and int(freq_hz) % int(sample_rate) == 0


def fractional_cycles(freq_hz: float, sample_index: np.ndarray, sample_rate: float) -> np.ndarray:
    """
    Fractional part of freq * n / fs for integer sample indices.

    When frequency and sample rate are integral the result is computed in
    integer arithmetic, so a tone that is a multiple of the sample rate
    aliases to exactly zero cycles at every sample, however large n gets.

    Args:
        freq_hz: Tone frequency in Hz (may be negative)
        sample_index: Integer sample indices
        sample_rate: Sample rate in Hz

    Returns:
        Cycles in [0, 1)
    """
    n = np.asarray(sample_index, dtype=np.int64)
    if is_integral(freq_hz) and is_integral(sample_rate):
        if aliases_to_dc(freq_hz, sample_rate):
            return np.zeros(n.shape, dtype=float)
        fs = int(sample_rate)
        f_mod = int(freq_hz) % fs
        residue = (f_mod * (n % fs)) % fs
        return residue.astype(float) / fs
    return np.mod(freq_hz * n.astype(float) / sample_rate, 1.0)
