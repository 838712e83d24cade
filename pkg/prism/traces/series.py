"""
Aggregated demand series and the trace → series aggregation.

Bucket ``i`` of a series covers ``[start + i·w, start + (i+1)·w)`` and holds
the time-weighted mean number of GPUs held inside it:

    value_i = Σ_jobs gpu_request · |[start_job, end_job) ∩ bucket_i| / w

The aggregation evaluates the cumulative GPU-seconds curve ``G(t)`` at every
bucket edge with two prefix sums over jobs sorted by start and by end, then
differences it. Cost is O(R log R + n), independent of how long jobs run.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from prism.errors import ContractError, EmptySeriesError, NumericError, SeriesFormatError
from prism.patterns import SERIES_KEY_RE
from prism.traces.records import Priority, TraceRecord, validate_records
from prism.utils.io import atomic_to_csv
from prism.utils.logger import get_logger, log_safe

logger = get_logger(__name__)

HOURLY = pd.Timedelta(hours=1)
_EPOCH = pd.Timestamp(0, tz="UTC")
_WILDCARD = "*"


@dataclass(frozen=True)
class SeriesKey:
    """
    A ``(priority, org)`` filter; ``None`` on either side matches anything.
    """

    priority: Priority | None = None
    org: str | None = None

    @classmethod
    def parse(cls, text: str) -> SeriesKey:
        """
        Parse ``"HP/org-a"``, ``"Spot/*"``, ``"*/org-b"`` or a bare ``"HP"``.
        """
        match = SERIES_KEY_RE.match(text.strip())
        if not match:
            raise SeriesFormatError(f"malformed series key {log_safe(text)!r} (expected <HP|Spot|*>/<org|*>)")
        priority, org = match.group("priority"), match.group("org")
        return cls(
            None if priority == _WILDCARD else Priority(priority),
            None if org in (None, _WILDCARD) else org,
        )

    def matches(self, record: TraceRecord) -> bool:
        return (self.priority is None or record.priority == self.priority) and (
            self.org is None or record.org == self.org
        )

    def covers(self, other: SeriesKey) -> bool:
        """
        Whether every record matched by ``other`` is also matched by this key.
        """
        return (self.priority is None or self.priority == other.priority) and (
            self.org is None or self.org == other.org
        )

    def __str__(self) -> str:
        priority = _WILDCARD if self.priority is None else self.priority.value
        return f"{priority}/{_WILDCARD if self.org is None else self.org}"


@dataclass(frozen=True, eq=False)
class DemandSeries:
    """
    Evenly bucketed, non-negative GPU demand starting at a UTC instant.
    """

    start: pd.Timestamp
    values: np.ndarray
    bucket_width: pd.Timedelta = HOURLY
    series_key: SeriesKey | None = None
    _stamps: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ContractError(f"series values must be 1-D, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise NumericError("series values must be finite")
        if (values < 0).any():
            raise ContractError("series values must be non-negative")
        if self.bucket_width <= pd.Timedelta(0):
            raise ContractError(f"bucket width must be positive, got {self.bucket_width}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "start", to_utc(self.start))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def bucket_hours(self) -> float:
        return self.bucket_width / HOURLY

    @property
    def timestamps(self) -> pd.DatetimeIndex:
        return pd.date_range(self.start, periods=len(self), freq=self.bucket_width)

    def timestamps_from(self, offset: int, count: int) -> pd.DatetimeIndex:
        """
        Bucket starts for positions ``offset .. offset+count-1`` (may run past the end).
        """
        return pd.date_range(self.start + offset * self.bucket_width, periods=count, freq=self.bucket_width)

    @property
    def stamps(self) -> np.ndarray:
        """
        ``[n, 2]`` integer calendar features: hour-of-day (0-23), day-of-week (Mon=0).
        """
        if self._stamps is None:
            object.__setattr__(self, "_stamps", calendar_stamps(self.timestamps))
        return self._stamps

    def slice(self, begin: int, end: int) -> DemandSeries:
        return DemandSeries(
            self.start + begin * self.bucket_width, self.values[begin:end], self.bucket_width, self.series_key
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"timestamp": _format_times(self.timestamps), "value": self.values})


def to_utc(instant) -> pd.Timestamp:
    """
    Coerce an instant to a UTC ``Timestamp`` (naive values are taken as UTC).
    """
    stamp = pd.Timestamp(instant)
    return stamp.tz_localize("UTC") if stamp.tzinfo is None else stamp.tz_convert("UTC")


def calendar_stamps(timestamps: pd.DatetimeIndex) -> np.ndarray:
    """
    Hour-of-day and day-of-week (Monday=0) per timestamp, as an ``[n, 2]`` int array.
    """
    return np.stack([timestamps.hour.to_numpy(), timestamps.dayofweek.to_numpy()], axis=1).astype(np.int64)


def _filter(records: Sequence[TraceRecord], series_key: SeriesKey | None) -> list[TraceRecord]:
    validate_records(records)
    kept = list(records) if series_key is None else [r for r in records if series_key.matches(r)]
    if not kept:
        label = "the trace" if series_key is None else f"series key {series_key}"
        raise EmptySeriesError(f"no trace records remain for {label}")
    return kept


def _seconds(instant) -> float:
    return (to_utc(instant) - _EPOCH).total_seconds()


def _span(records: Sequence[TraceRecord], width_s: float) -> tuple[float, int]:
    first = min(r.start_time for r in records)
    last = max(r.end_time for r in records)
    origin = np.floor(first / width_s) * width_s
    buckets = max(1, int(np.ceil((last - origin) / width_s)))
    return float(origin), buckets


def _bucket_values(records: Sequence[TraceRecord], origin: float, buckets: int, width_s: float) -> np.ndarray:
    """
    Exact time-weighted demand per bucket via the cumulative GPU-seconds curve.
    """
    starts = np.array([r.start_time for r in records], dtype=np.float64) - origin
    ends = np.array([r.end_time for r in records], dtype=np.float64) - origin
    gpus = np.array([r.gpu_request for r in records], dtype=np.float64)
    edges = width_s * np.arange(buckets + 1, dtype=np.float64)

    def held_since(times: np.ndarray) -> np.ndarray:
        # Σ_{times_j ≤ t} g_j · (t − times_j) at every edge t.
        order = np.argsort(times, kind="stable")
        sorted_times = times[order]
        g_cum = np.concatenate([[0.0], np.cumsum(gpus[order])])
        gt_cum = np.concatenate([[0.0], np.cumsum(gpus[order] * sorted_times)])
        idx = np.searchsorted(sorted_times, edges, side="right")
        return edges * g_cum[idx] - gt_cum[idx]

    cumulative = held_since(starts) - held_since(ends)
    values = np.diff(cumulative) / width_s
    # Prefix-sum cancellation can leave tiny negatives on idle buckets.
    return values.clip(min=0.0)


def aggregate(
    records: Sequence[TraceRecord],
    bucket_width: pd.Timedelta = HOURLY,
    series_key: SeriesKey | str | None = None,
    start: pd.Timestamp | None = None,
    end: pd.Timestamp | None = None,
) -> DemandSeries:
    """
    Aggregate job records into a demand series, optionally filtered by series key.

    Without ``start``/``end`` the series spans from the bucket containing the
    earliest start to the bucket containing the latest end. Explicit bounds
    align several aggregations on one grid (their values then add up exactly).
    """
    key = SeriesKey.parse(series_key) if isinstance(series_key, str) else series_key
    kept = _filter(records, key)
    width_s = bucket_width.total_seconds()
    origin = _span(kept, width_s)[0] if start is None else _seconds(start)
    last = max(r.end_time for r in kept) if end is None else _seconds(end)
    buckets = max(1, int(np.ceil((last - origin) / width_s)))
    values = _bucket_values(kept, origin, buckets, width_s)
    logger.debug("Aggregated %d records into %d buckets (key=%s)", len(kept), buckets, key)
    return DemandSeries(_EPOCH + pd.Timedelta(seconds=origin), values, bucket_width, key)


def aggregate_by_key(
    records: Sequence[TraceRecord],
    bucket_width: pd.Timedelta = HOURLY,
    by: Sequence[str] = ("priority", "org"),
) -> dict[str, DemandSeries]:
    """
    One aligned series per distinct ``(priority, org)`` key (or per priority / per org).
    """
    if not set(by) <= {"priority", "org"} or not by:
        raise ContractError(f"group keys must be drawn from priority/org, got {list(by)}")
    kept = _filter(records, None)
    width_s = bucket_width.total_seconds()
    origin, buckets = _span(kept, width_s)
    groups: dict[SeriesKey, list[TraceRecord]] = {}
    for record in kept:
        key = SeriesKey(
            record.priority if "priority" in by else None,
            record.org if "org" in by else None,
        )
        groups.setdefault(key, []).append(record)
    start = _EPOCH + pd.Timedelta(seconds=origin)
    return {
        str(key): DemandSeries(start, _bucket_values(group, origin, buckets, width_s), bucket_width, key)
        for key, group in sorted(groups.items(), key=lambda item: str(item[0]))
    }


def _format_times(index: pd.DatetimeIndex) -> pd.Index:
    return index.strftime("%Y-%m-%dT%H:%M:%SZ")


def write_series_csv(series: DemandSeries | Mapping[str, DemandSeries], path: Path | str) -> Path:
    """
    Write ``timestamp,value`` for one series or ``timestamp,value,series_key`` for several.
    """
    if isinstance(series, DemandSeries):
        return atomic_to_csv(series.to_frame(), path, index=False)
    frames = [s.to_frame().assign(series_key=key) for key, s in series.items()]
    return atomic_to_csv(pd.concat(frames, ignore_index=True), path, index=False)


def _infer_width(times: pd.DatetimeIndex) -> pd.Timedelta:
    if len(times) < 2:
        return HOURLY
    steps = np.unique(np.diff(times.asi8))
    if len(steps) != 1 or steps[0] <= 0:
        raise SeriesFormatError("series timestamps must be strictly increasing and evenly spaced")
    return pd.Timedelta(int(steps[0]), unit="ns")


def _read_frame(path: Path | str) -> pd.DataFrame:
    df = pd.read_csv(path, encoding="utf-8")
    if not {"timestamp", "value"} <= set(df.columns):
        raise SeriesFormatError(f"{log_safe(path)} needs columns timestamp,value[,series_key]")
    try:
        df["timestamp"] = pd.to_datetime(df["timestamp"], utc=True, format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise SeriesFormatError(f"{log_safe(path)} has unparseable timestamps") from exc
    return df


def read_series_csv(path: Path | str, series_key: str | None = None) -> DemandSeries:
    """
    Load a series file.

    A multi-series file (with a ``series_key`` column) is reduced to the sum of
    the keys matching ``series_key``; without a selector every key is summed,
    which gives total cluster demand.
    """
    df = _read_frame(path)
    key = SeriesKey.parse(series_key) if series_key else None
    if "series_key" in df.columns:
        if key is not None:
            wanted = {k for k in df["series_key"].unique() if key.covers(SeriesKey.parse(str(k)))}
            df = df[df["series_key"].isin(wanted)]
            if df.empty:
                raise EmptySeriesError(f"no rows in {log_safe(path)} match series key {key}")
        df = df.groupby("timestamp", sort=True)["value"].sum().reset_index()
    elif key is not None:
        raise SeriesFormatError(f"{log_safe(path)} has no series_key column to filter on")
    if df.empty:
        raise EmptySeriesError(f"{log_safe(path)} contains no rows")
    times = pd.DatetimeIndex(df["timestamp"])
    values = pd.to_numeric(df["value"], errors="coerce").to_numpy(dtype=np.float64)
    series = DemandSeries(times[0], values, _infer_width(times), key)
    logger.info("Loaded series of %d buckets from %s", len(series), log_safe(path))
    return series


def read_series_by_key(path: Path | str) -> dict[str, DemandSeries]:
    """
    Load every series of a multi-series file, keyed by its ``series_key`` value.
    """
    df = _read_frame(path)
    if "series_key" not in df.columns:
        raise SeriesFormatError(f"{log_safe(path)} has no series_key column")
    if df.empty:
        raise EmptySeriesError(f"{log_safe(path)} contains no rows")
    result = {}
    for key, group in df.groupby("series_key", sort=True):
        group = group.sort_values("timestamp")
        times = pd.DatetimeIndex(group["timestamp"])
        values = pd.to_numeric(group["value"], errors="coerce").to_numpy(dtype=np.float64)
        result[str(key)] = DemandSeries(times[0], values, _infer_width(times), SeriesKey.parse(str(key)))
    logger.info("Loaded %d keyed series from %s", len(result), log_safe(path))
    return result
