"""
Run-directory persistence for the thermal-stability twin.
CSV for every table (pandas), JSON for the manifest, YAML for scenarios.
"""

from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, List, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from src.constants import (
    CAMPAIGN_COLUMNS,
    CSV_FLOAT_FORMAT,
    ERROR_DUMP_TOO_LARGE,
    MANIFEST_FILE,
    RUN_STATUS_COMPLETE,
    RUN_STATUS_FAILED,
    RUN_STATUS_RUNNING,
    STATS_COLUMNS,
    TRACE_COLUMNS,
)
from src.exceptions import ConfigurationError, ReportFormatError
from src.models.schemas import RunManifest
from src.services.analysis import StabilityStats, stats_frame, stats_from_frame
from src.services.rfchain import ComplexEnvelope
from src.services.schedule_capture import CampaignResult
from src.utils.logging import get_logger

logger = get_logger("storage")

PathLike = Union[str, Path]


def ensure_dir(path: PathLike) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.debug("csv_written", path=str(path), rows=len(frame))
    return path


def write_text(text: str, path: PathLike) -> Path:
    path = Path(path)
    path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    return path


# ============== Manifest ==============

def write_manifest(manifest: RunManifest, run_dir: PathLike) -> Path:
    path = Path(run_dir) / MANIFEST_FILE
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def read_manifest(run_dir: PathLike) -> RunManifest:
    path = Path(run_dir) / MANIFEST_FILE
    if not path.exists():
        raise ConfigurationError(f"no {MANIFEST_FILE} in '{run_dir}'")
    try:
        return RunManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        diagnostics = [f"{MANIFEST_FILE}: {err['msg']}" for err in exc.errors()]
        raise ConfigurationError(f"corrupt {MANIFEST_FILE} in '{run_dir}'", diagnostics) from exc


# ============== Campaign Tables ==============

def campaign_frame(result: CampaignResult) -> pd.DataFrame:
    """One row per pulse: unit, channel, round, t_s, amp, phase_deg."""
    frames = []
    for index, series in enumerate(result.series):
        n = len(series)
        frames.append(pd.DataFrame({
            "unit": np.full(n, series.channel_id.unit),
            "channel": np.full(n, series.channel_id.ch),
            "round": np.arange(n),
            "t_s": series.timestamps,
            "amp": series.amplitudes,
            "phase_deg": result.raw_phases[index],
        }))
    frame = pd.concat(frames, ignore_index=True)
    return frame.sort_values(["round", "unit", "channel"], ignore_index=True)[CAMPAIGN_COLUMNS]


def thermal_trace_frame(result: CampaignResult) -> pd.DataFrame:
    history = result.thermal
    n_trace, n_nodes = history.trace_temperatures.shape
    return pd.DataFrame({
        "t_s": np.repeat(history.trace_times, n_nodes),
        "node_id": np.tile(np.array(history.node_ids, dtype=object), n_trace),
        "temp_C": history.trace_temperatures.reshape(-1),
        "duty": history.trace_duties.reshape(-1),
    }, columns=TRACE_COLUMNS)


def read_campaign_csv(path: PathLike) -> pd.DataFrame:
    frame = _read_csv(path)
    missing = [c for c in CAMPAIGN_COLUMNS if c not in frame.columns]
    if missing:
        raise ReportFormatError(f"'{path}' lacks columns {missing}", row=1)
    return frame


# ============== Stats Tables ==============

def write_stats_csv(stats: Sequence[StabilityStats], path: PathLike) -> Path:
    return write_frame(stats_frame(stats), path)


def _read_csv(path: PathLike) -> pd.DataFrame:
    try:
        return pd.read_csv(path)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"file not found: '{path}'") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise ReportFormatError(f"cannot parse '{path}': {exc}") from exc


def read_stats_csv(path: PathLike) -> List[StabilityStats]:
    """
    Parse a stats CSV (unit, channel, amp_p2p, amp_std, phase_p2p, phase_std).

    Row numbers in errors count the header as row 1.

    Raises:
        ReportFormatError: Missing columns or a non-numeric / negative value
    """
    frame = _read_csv(path)
    missing = [c for c in STATS_COLUMNS if c not in frame.columns]
    if missing:
        raise ReportFormatError(f"missing columns {missing}", row=1)
    for index, row in enumerate(frame[STATS_COLUMNS].itertuples(index=False), start=2):
        for column, value in zip(STATS_COLUMNS, row):
            numeric = pd.to_numeric(value, errors="coerce")
            if pd.isna(numeric) or not np.isfinite(numeric):
                raise ReportFormatError(f"column '{column}' has invalid value '{value}'", row=index)
            if numeric < 0:
                raise ReportFormatError(f"column '{column}' is negative", row=index)
            if column in ("unit", "channel") and float(numeric) != int(numeric):
                raise ReportFormatError(f"column '{column}' must be an integer", row=index)
    frame = frame[STATS_COLUMNS].apply(pd.to_numeric)
    return stats_from_frame(frame)


# ============== Envelope Dump ==============

class EnvelopeDumpWriter:
    """
    Streams captured windows to CSV (t_s, re, im).

    The expected row count is checked before anything is written.
    """

    def __init__(self, path: PathLike, expected_rows: int, max_rows: int, force: bool = False):
        if expected_rows > max_rows and not force:
            raise ConfigurationError(ERROR_DUMP_TOO_LARGE.format(rows=expected_rows, limit=max_rows))
        self.path = Path(path)
        self.rows = 0
        self._buffer: List[ComplexEnvelope] = []
        self.path.write_text("t_s,re,im\n", encoding="utf-8")
        logger.info("envelope_dump_opened", path=str(self.path), expected_rows=expected_rows)

    def __call__(self, window: ComplexEnvelope) -> None:
        self._buffer.append(window)
        if len(self._buffer) >= 1000:
            self.flush()

    def flush(self) -> None:
        if not self._buffer:
            return
        frame = pd.DataFrame({
            "t_s": np.concatenate([w.times for w in self._buffer]),
            "re": np.concatenate([w.samples.real for w in self._buffer]),
            "im": np.concatenate([w.samples.imag for w in self._buffer]),
        })
        frame.to_csv(self.path, mode="a", header=False, index=False,
                     float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        self.rows += len(frame)
        self._buffer.clear()

    def close(self) -> None:
        self.flush()
        logger.info("envelope_dump_closed", path=str(self.path), rows=self.rows)


def list_outputs(run_dir: PathLike, names: Iterable[str]) -> List[str]:
    run_dir = Path(run_dir)
    return [name for name in names if (run_dir / name).exists()]


# ============== Run Directory ==============

class RunRecorder:
    """
    Owns one run directory and its manifest.

    The manifest is written with status "running" on entry and rewritten as
    "complete" or "failed" on exit, listing the outputs recorded so far.
    """

    def __init__(self, run_dir: PathLike, manifest: RunManifest):
        self.run_dir = ensure_dir(run_dir)
        self.manifest = manifest

    def __enter__(self) -> "RunRecorder":
        self.manifest.status = RUN_STATUS_RUNNING
        write_manifest(self.manifest, self.run_dir)
        return self

    def path(self, name: str) -> Path:
        if name not in self.manifest.outputs:
            self.manifest.outputs.append(name)
        return self.run_dir / name

    def __exit__(self, exc_type, exc, tb) -> bool:
        self.manifest.finished_at = datetime.now(timezone.utc)
        if exc is None:
            self.manifest.status = RUN_STATUS_COMPLETE
        else:
            self.manifest.status = RUN_STATUS_FAILED
            self.manifest.error = str(exc)
            self.manifest.outputs = list_outputs(self.run_dir, self.manifest.outputs)
        write_manifest(self.manifest, self.run_dir)
        logger.info("run_recorded", run_dir=str(self.run_dir), status=self.manifest.status,
                    outputs=len(self.manifest.outputs))
        return False
