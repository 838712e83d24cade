"""
Supervised windows over a demand series with a chronological split.

The series is cut into contiguous train / val / test segments (earliest to
latest) and windows are enumerated inside each segment only, so no window
straddles a split boundary and every target position lies strictly after its
history positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import pandas as pd

from prism.errors import ConfigError, ContractError, SizingError
from prism.traces.series import DemandSeries, calendar_stamps


@dataclass(frozen=True, eq=False)
class WindowBatch:
    """
    ``B`` windows: history ``X [B, L]``, targets ``Y [B, H]`` and calendar stamps
    ``[B, L+H, 2]`` (hour-of-day, day-of-week) covering both.

    ``origins`` holds each window's first history index in the source series;
    ``mu`` / ``sigma`` are per-window mean and standard deviation of ``X``.
    """

    X: np.ndarray
    Y: np.ndarray
    stamps: np.ndarray
    origins: np.ndarray
    start: pd.Timestamp
    bucket_width: pd.Timedelta

    def __post_init__(self) -> None:
        if self.X.shape[0] != self.Y.shape[0] or self.X.shape[0] != self.stamps.shape[0]:
            raise ContractError("X, Y and stamps must share the batch extent")
        if self.stamps.shape[1:] != (self.lookback + self.horizon, 2):
            raise ContractError(f"stamps shape {self.stamps.shape} does not cover L+H positions")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def lookback(self) -> int:
        return self.X.shape[1]

    @property
    def horizon(self) -> int:
        return self.Y.shape[1]

    @property
    def mu(self) -> np.ndarray:
        return self.X.mean(axis=1)

    @property
    def sigma(self) -> np.ndarray:
        return self.X.std(axis=1)

    @property
    def norm_stats(self) -> tuple[np.ndarray, np.ndarray]:
        return self.mu, self.sigma

    def subset(self, indices: np.ndarray | slice) -> WindowBatch:
        return WindowBatch(
            self.X[indices],
            self.Y[indices],
            self.stamps[indices],
            self.origins[indices],
            self.start,
            self.bucket_width,
        )

    def target_times(self) -> pd.DatetimeIndex:
        """
        Timestamps of every target position, row-major ``[B·H]``.
        """
        offsets = (self.origins[:, None] + self.lookback + np.arange(self.horizon)).reshape(-1)
        return pd.DatetimeIndex(self.start + offsets * self.bucket_width)


class WindowSplits(NamedTuple):
    train: WindowBatch
    val: WindowBatch
    test: WindowBatch


def split_bounds(length: int, split: tuple[float, float, float]) -> list[tuple[int, int]]:
    """
    Chronological ``[begin, end)`` segments for train, val and test.
    """
    if len(split) != 3 or any(f < 0 for f in split) or not math.isclose(sum(split), 1.0, abs_tol=1e-9):
        raise ConfigError(f"split fractions must be three non-negative values summing to 1, got {split}")
    n_train = math.floor(length * split[0])
    n_val = math.floor(length * split[1])
    if split[2] == 0:
        n_val = length - n_train
    return [(0, n_train), (n_train, n_train + n_val), (n_train + n_val, length)]


def window_count(length: int, lookback: int, horizon: int, stride: int) -> int:
    if length < lookback + horizon:
        return 0
    return (length - lookback - horizon) // stride + 1


def _batch(series: DemandSeries, stamps: np.ndarray, origins: np.ndarray, lookback: int, horizon: int) -> WindowBatch:
    span = origins[:, None] + np.arange(lookback + horizon)
    values = series.values[span] if len(origins) else np.zeros((0, lookback + horizon))
    return WindowBatch(
        values[:, :lookback].copy(),
        values[:, lookback:].copy(),
        stamps[span] if len(origins) else np.zeros((0, lookback + horizon, 2), dtype=np.int64),
        origins,
        series.start,
        series.bucket_width,
    )


def make_windows(
    series: DemandSeries,
    lookback: int,
    horizon: int,
    stride: int = 1,
    split: tuple[float, float, float] = (0.7, 0.15, 0.15),
) -> WindowSplits:
    """
    Enumerate ``(X, Y)`` windows inside each chronological split segment.

    A segment shorter than ``L+H`` yields an empty batch; a series shorter
    than ``L+H`` overall is a sizing error.
    """
    if lookback < 1 or horizon < 1 or stride < 1:
        raise ConfigError(f"L, H and stride must be >= 1, got L={lookback}, H={horizon}, stride={stride}")
    if len(series) < lookback + horizon:
        raise SizingError(
            f"series has {len(series)} buckets but windows need at least L+H={lookback + horizon}"
        )
    stamps = series.stamps
    batches = []
    for begin, end in split_bounds(len(series), split):
        count = window_count(end - begin, lookback, horizon, stride)
        origins = begin + stride * np.arange(count, dtype=np.int64)
        batches.append(_batch(series, stamps, origins, lookback, horizon))
    return WindowSplits(*batches)


def forecast_window(series: DemandSeries, lookback: int, horizon: int) -> WindowBatch:
    """
    The most recent ``L`` buckets as a single window with extrapolated stamps.

    ``Y`` is zero-filled: the targets lie beyond the end of the series.
    """
    if len(series) < lookback:
        raise SizingError(f"series has {len(series)} buckets but the model needs L={lookback}")
    origin = len(series) - lookback
    stamps = calendar_stamps(series.timestamps_from(origin, lookback + horizon))
    return WindowBatch(
        series.values[origin:].reshape(1, lookback).copy(),
        np.zeros((1, horizon)),
        stamps.reshape(1, lookback + horizon, 2),
        np.array([origin], dtype=np.int64),
        series.start,
        series.bucket_width,
    )
