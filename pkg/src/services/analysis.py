"""
Stability statistics for per-channel pulse series.

Amplitudes are normalized by their own mean and reported as percent
deviation; phases are unwrapped and taken relative to the first record.
Standard deviations use the population (1/N) estimator.
"""

from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

from src.constants import ERROR_TOO_FEW_RECORDS, ERROR_ZERO_MEAN, STATS_COLUMNS
from src.exceptions import AnalysisError
from src.services.rfchain import ChannelId
from src.utils.logging import get_logger

logger = get_logger("analysis")

METRICS = ["amp_p2p_pct", "amp_std_pct", "phase_p2p_deg", "phase_std_deg"]


@dataclass(frozen=True, eq=False)
class ChannelSeries:
    """Time series of one channel: raw amplitudes and unwrapped phases."""
    channel_id: ChannelId
    timestamps: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        n = len(self.timestamps)
        if len(self.amplitudes) != n or len(self.phases) != n:
            raise AnalysisError(f"channel {self.channel_id}: series arrays differ in length")
        if n > 1 and not np.all(np.diff(self.timestamps) > 0):
            raise AnalysisError(f"channel {self.channel_id}: timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True)
class StabilityStats:
    channel_id: ChannelId
    amp_p2p_pct: float
    amp_std_pct: float
    phase_p2p_deg: float
    phase_std_deg: float

    def metric(self, name: str) -> float:
        return float(getattr(self, name))


@dataclass(frozen=True)
class MetricRange:
    minimum: float
    maximum: float
    mean: float


@dataclass(frozen=True)
class StatsSummary:
    """Range of each metric across channels."""
    channels: int
    ranges: Dict[str, MetricRange]

    def __getitem__(self, metric: str) -> MetricRange:
        return self.ranges[metric]

    def summary_line(self) -> str:
        amp = self.ranges["amp_std_pct"]
        phase = self.ranges["phase_std_deg"]
        return (
            f"The standard deviation of the amplitude is {amp.minimum:.2f}–{amp.maximum:.2f}% "
            f"(mean {amp.mean:.2f}%) and that of the phase is "
            f"{phase.minimum:.2f}–{phase.maximum:.2f}° (mean {phase.mean:.2f}°)."
        )


def normalize_amplitude(series: ChannelSeries) -> ChannelSeries:
    """
    Divide amplitudes by their time-series mean.

    Raises:
        AnalysisError: Empty series or non-positive mean
    """
    if len(series) == 0:
        raise AnalysisError(ERROR_TOO_FEW_RECORDS.format(channel_id=series.channel_id, count=0))
    mean = float(np.mean(series.amplitudes))
    if not mean > 0:
        raise AnalysisError(ERROR_ZERO_MEAN.format(channel_id=series.channel_id, mean=mean))
    return ChannelSeries(series.channel_id, series.timestamps, series.amplitudes / mean, series.phases)


def unwrap_phase(raw_phases: Sequence[float]) -> np.ndarray:
    """
    Add multiples of 360 so consecutive differences lie in (-180, 180].

    The first sample is unchanged; each later sample moves by a whole
    number of turns. np.unwrap leaves a step of exactly -180 in place, so
    those steps are lifted to +180 afterwards.
    """
    raw = np.asarray(raw_phases, dtype=float)
    if raw.size < 2:
        return raw.copy()
    unwrapped = np.unwrap(raw, period=360.0)
    lifted = np.where(np.diff(unwrapped) == -180.0, 360.0, 0.0)
    return unwrapped + np.concatenate(([0.0], np.cumsum(lifted)))


def compute_stats(series: ChannelSeries) -> StabilityStats:
    """
    Peak-to-peak and standard deviation of amplitude (percent) and phase (degrees).

    Args:
        series: Channel series with at least 2 records

    Returns:
        StabilityStats for the channel

    Raises:
        AnalysisError: Fewer than 2 records or non-positive mean amplitude
    """
    if len(series) < 2:
        raise AnalysisError(ERROR_TOO_FEW_RECORDS.format(channel_id=series.channel_id, count=len(series)))
    amp_pct = (normalize_amplitude(series).amplitudes - 1.0) * 100.0
    phases = unwrap_phase(series.phases)
    phases = phases - phases[0]
    return StabilityStats(
        channel_id=series.channel_id,
        amp_p2p_pct=float(np.ptp(amp_pct)),
        amp_std_pct=float(np.std(amp_pct)),
        phase_p2p_deg=float(np.ptp(phases)),
        phase_std_deg=float(np.std(phases)),
    )


def summarize(stats: Sequence[StabilityStats]) -> StatsSummary:
    """Min / max / mean of each metric across channels."""
    if not stats:
        raise AnalysisError("cannot summarize an empty stats list")
    ranges = {}
    for metric in METRICS:
        values = np.array([s.metric(metric) for s in stats])
        ranges[metric] = MetricRange(float(values.min()), float(values.max()), float(values.mean()))
    return StatsSummary(channels=len(stats), ranges=ranges)


def stats_frame(stats: Sequence[StabilityStats]) -> pd.DataFrame:
    rows = [
        {
            "unit": s.channel_id.unit,
            "channel": s.channel_id.ch,
            "amp_p2p": s.amp_p2p_pct,
            "amp_std": s.amp_std_pct,
            "phase_p2p": s.phase_p2p_deg,
            "phase_std": s.phase_std_deg,
        }
        for s in stats
    ]
    return pd.DataFrame(rows, columns=STATS_COLUMNS).sort_values(["unit", "channel"], ignore_index=True)


def stats_from_frame(frame: pd.DataFrame) -> List[StabilityStats]:
    return [
        StabilityStats(
            channel_id=ChannelId(int(row.unit), int(row.channel)),
            amp_p2p_pct=float(row.amp_p2p),
            amp_std_pct=float(row.amp_std),
            phase_p2p_deg=float(row.phase_p2p),
            phase_std_deg=float(row.phase_std),
        )
        for row in frame.itertuples(index=False)
    ]


def render_table(stats: Sequence[StabilityStats]) -> str:
    """Aligned text table, one row per channel."""
    header = f"{'Unit':>4} {'Ch':>3} {'Amp p2p (%)':>12} {'Amp std (%)':>12} {'Phase p2p (°)':>14} {'Phase std (°)':>14}"
    lines = [header, "-" * len(header)]
    for row in stats_frame(stats).itertuples(index=False):
        lines.append(
            f"{row.unit:>4d} {row.channel:>3d} {row.amp_p2p:>12.3f} {row.amp_std:>12.3f} "
            f"{row.phase_p2p:>14.2f} {row.phase_std:>14.3f}"
        )
    return "\n".join(lines)


def plot_frame(series: Sequence[ChannelSeries]) -> pd.DataFrame:
    """Long-format normalized amplitude and relative phase vs time."""
    frames = []
    for s in series:
        normalized = normalize_amplitude(s)
        phases = unwrap_phase(s.phases)
        frames.append(pd.DataFrame({
            "unit": s.channel_id.unit,
            "channel": s.channel_id.ch,
            "t_s": s.timestamps,
            "amp_norm": normalized.amplitudes,
            "phase_deg": phases - phases[0],
        }))
    return pd.concat(frames, ignore_index=True)


def ratio(a: float, b: float) -> float:
    """b / a, with 0/0 taken as 1."""
    if a == 0:
        return 1.0 if b == 0 else float("inf")
    return b / a


@dataclass
class StatsComparison:
    table: pd.DataFrame
    mean_ratios: Dict[str, float]

    def more_than_doubled(self) -> bool:
        return self.mean_ratios["amp_std"] >= 2.0 and self.mean_ratios["phase_std"] >= 2.0

    def summary_text(self, label_a: str = "a", label_b: str = "b") -> str:
        lines = [f"Mean {label_b}/{label_a} ratios over {len(self.table)} channels:"]
        for name, value in self.mean_ratios.items():
            lines.append(f"  {name:<10} {value:.3f}")
        verdict = "yes" if self.more_than_doubled() else "no"
        lines.append(f"Amplitude and phase std more than doubled: {verdict}")
        return "\n".join(lines)


def compare_stats(stats_a: Sequence[StabilityStats], stats_b: Sequence[StabilityStats]) -> StatsComparison:
    """
    Per-channel ratios b/a of the four metrics.

    Mean ratios are ratios of the channel means of each metric.

    Raises:
        AnalysisError: The two runs cover different channels
    """
    frame_a = stats_frame(stats_a).set_index(["unit", "channel"])
    frame_b = stats_frame(stats_b).set_index(["unit", "channel"])
    if sorted(frame_a.index) != sorted(frame_b.index):
        raise AnalysisError("compared runs cover different channels")
    frame_b = frame_b.loc[frame_a.index]

    metrics = STATS_COLUMNS[2:]
    table = pd.DataFrame(index=frame_a.index)
    for metric in metrics:
        table[f"{metric}_a"] = frame_a[metric]
        table[f"{metric}_b"] = frame_b[metric]
        table[f"{metric}_ratio"] = [ratio(a, b) for a, b in zip(frame_a[metric], frame_b[metric])]
    mean_ratios = {metric: ratio(float(frame_a[metric].mean()), float(frame_b[metric].mean())) for metric in metrics}
    logger.info("stats_compared", channels=len(table), **{f"{k}_ratio": round(v, 4) for k, v in mean_ratios.items()})
    return StatsComparison(table=table.reset_index(), mean_ratios=mean_ratios)
