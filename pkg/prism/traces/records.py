"""
Job-lifecycle trace records and the trace CSV reader.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path

import numpy as np
import pandas as pd

from prism.errors import RecordValidationError, SeriesFormatError
from prism.patterns import ORG_RE
from prism.utils.logger import get_logger, log_safe

logger = get_logger(__name__)

TRACE_COLUMNS = ["job_id", "submit_time", "start_time", "end_time", "gpu_request", "priority", "org"]


class Priority(StrEnum):
    HP = "HP"
    SPOT = "Spot"


@dataclass(frozen=True, slots=True)
class TraceRecord:
    """
    One job: when it was submitted, when it held GPUs, how many, and for whom.

    Times are UTC unix seconds; ``gpu_request`` may be fractional.
    """

    job_id: str
    submit_time: float
    start_time: float
    end_time: float
    gpu_request: float
    priority: Priority
    org: str


def validate_records(records: Sequence[TraceRecord]) -> None:
    """
    Reject records whose interval is reversed or whose request is negative/non-finite.

    All offending job ids are collected before raising, so one pass reports them all.
    """
    bad = [
        r.job_id
        for r in records
        if not (np.isfinite(r.start_time) and np.isfinite(r.end_time))
        or r.end_time < r.start_time
        or not np.isfinite(r.gpu_request)
        or r.gpu_request < 0
    ]
    if bad:
        raise RecordValidationError(bad, "invalid trace records (end before start or bad gpu_request)")


def _parse_times(column: pd.Series, name: str) -> np.ndarray:
    """
    Accept unix seconds or ISO-8601 UTC strings; return float seconds.
    """
    numeric = pd.to_numeric(column, errors="coerce")
    if numeric.notna().all():
        return numeric.to_numpy(dtype=np.float64)
    try:
        stamps = pd.to_datetime(column, utc=True, format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise SeriesFormatError(f"column {name!r} holds values that are neither unix seconds nor ISO-8601") from exc
    return (stamps - pd.Timestamp(0, tz="UTC")).dt.total_seconds().to_numpy(dtype=np.float64)


def records_from_frame(df: pd.DataFrame) -> list[TraceRecord]:
    """
    Build records from a DataFrame with the trace columns.
    """
    missing = [c for c in TRACE_COLUMNS if c not in df.columns]
    if missing:
        raise SeriesFormatError(f"trace is missing columns: {', '.join(missing)}")
    priorities = df["priority"].astype(str).str.strip()
    unknown = sorted(set(priorities) - {p.value for p in Priority})
    if unknown:
        raise SeriesFormatError(f"unknown priority values: {', '.join(unknown)}")
    orgs = df["org"].astype(str).str.strip()
    bad_orgs = sorted({o for o in orgs if not ORG_RE.match(o)})
    if bad_orgs:
        raise SeriesFormatError(f"malformed org tags: {', '.join(log_safe(o, 40) for o in bad_orgs[:5])}")

    submit = _parse_times(df["submit_time"], "submit_time")
    start = _parse_times(df["start_time"], "start_time")
    end = _parse_times(df["end_time"], "end_time")
    gpus = pd.to_numeric(df["gpu_request"], errors="coerce").to_numpy(dtype=np.float64)
    records = [
        TraceRecord(str(job), float(s0), float(s1), float(s2), float(g), Priority(p), o)
        for job, s0, s1, s2, g, p, o in zip(
            df["job_id"].astype(str), submit, start, end, gpus, priorities, orgs, strict=True
        )
    ]
    validate_records(records)
    return records


def read_trace_csv(path: Path | str) -> list[TraceRecord]:
    """
    Load a trace CSV (``job_id,submit_time,start_time,end_time,gpu_request,priority,org``).
    """
    df = pd.read_csv(path, dtype={"job_id": str, "org": str, "priority": str}, encoding="utf-8")
    records = records_from_frame(df)
    logger.info("Loaded %d trace records from %s", len(records), log_safe(path))
    return records


def records_to_frame(records: Iterable[TraceRecord]) -> pd.DataFrame:
    """
    Tabulate records with unix-second times, in trace-CSV column order.
    """
    rows = [
        {
            "job_id": r.job_id,
            "submit_time": r.submit_time,
            "start_time": r.start_time,
            "end_time": r.end_time,
            "gpu_request": r.gpu_request,
            "priority": r.priority.value,
            "org": r.org,
        }
        for r in records
    ]
    return pd.DataFrame(rows, columns=TRACE_COLUMNS)
