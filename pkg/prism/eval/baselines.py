"""
Reference forecasters every model is measured against: repeat the last value,
copy the value one season back, and a least-squares linear map from the
history window to the horizon.
"""

from __future__ import annotations

import numpy as np

from prism.errors import ConfigError, SizingError
from prism.eval.metrics import MetricSet, metrics
from prism.traces.series import DemandSeries
from prism.traces.windows import WindowBatch, WindowSplits, make_windows
from prism.utils.logger import get_logger

logger = get_logger(__name__)

NAIVE_LAST = "naive-last"
SEASONAL_DAY = "seasonal-naive(24h)"
SEASONAL_WEEK = "seasonal-naive(168h)"
LINEAR = "linear"
BASELINES = (NAIVE_LAST, SEASONAL_DAY, SEASONAL_WEEK, LINEAR)

_SEASON_HOURS = {SEASONAL_DAY: 24.0, SEASONAL_WEEK: 168.0}


def lag_buckets(series: DemandSeries, hours: float) -> int:
    """
    A season of ``hours`` expressed in whole buckets of ``series``.
    """
    buckets = hours / series.bucket_hours
    if buckets < 1 or not float(buckets).is_integer():
        raise ConfigError(
            f"a {hours:g}h season is not a whole number of {series.bucket_hours:g}h buckets"
        )
    return int(buckets)


def naive_last(windows: WindowBatch) -> np.ndarray:
    """
    Every lead repeats the last observed value ``x_L``.
    """
    return np.repeat(windows.X[:, -1:], windows.horizon, axis=1)


def seasonal_naive(series: DemandSeries, windows: WindowBatch, lag: int) -> np.ndarray:
    """
    Lead ``h`` copies the value ``lag`` buckets earlier, stepping back whole
    seasons until the source lies before the forecast origin.

    Sources are read from ``series`` rather than the window, so a lag longer
    than the lookback still works as long as the series reaches back far enough.
    """
    leads = np.arange(windows.horizon)
    targets = windows.origins[:, None] + windows.lookback + leads[None, :]
    sources = targets - (leads // lag + 1) * lag
    if sources.size and sources.min() < 0:
        raise SizingError(
            f"seasonal lag of {lag} buckets reaches before the start of the series "
            f"(earliest window origin {int(windows.origins.min())}, L={windows.lookback})"
        )
    return series.values[sources]


class LinearForecaster:
    """
    ``Ŷ = [X, 1] · W`` with ``W`` solved by least squares on training windows.
    """

    def __init__(self) -> None:
        self.coef: np.ndarray | None = None

    @staticmethod
    def _design(history: np.ndarray) -> np.ndarray:
        return np.hstack([history, np.ones((history.shape[0], 1))])

    def fit(self, windows: WindowBatch) -> LinearForecaster:
        if len(windows) == 0:
            raise SizingError("the linear baseline needs at least one training window")
        self.coef, *_ = np.linalg.lstsq(self._design(windows.X), windows.Y, rcond=None)
        return self

    def predict(self, windows: WindowBatch) -> np.ndarray:
        if self.coef is None:
            raise SizingError("the linear baseline must be fit before predicting")
        return self._design(windows.X) @ self.coef


def baseline_forecasts(series: DemandSeries, splits: WindowSplits) -> dict[str, np.ndarray]:
    """
    Test-split forecasts ``[B, H]`` of every baseline, keyed by baseline name.
    """
    test = splits.test
    if len(test) == 0:
        raise SizingError("no test windows: the series is too short for the split and L+H")
    forecasts = {NAIVE_LAST: naive_last(test)}
    for name, hours in _SEASON_HOURS.items():
        forecasts[name] = seasonal_naive(series, test, lag_buckets(series, hours))
    forecasts[LINEAR] = LinearForecaster().fit(splits.train).predict(test)
    return forecasts


def baselines(
    series: DemandSeries,
    lookback: int,
    horizon: int,
    stride: int = 1,
    split: tuple[float, float, float] = (0.7, 0.15, 0.15),
) -> dict[str, MetricSet]:
    """
    Raw-scale test metrics of every baseline.

    ``r2`` is ``None`` when the test targets are constant.
    """
    splits = make_windows(series, lookback, horizon, stride, split)
    scores = {
        name: metrics(forecast, splits.test.Y, require_variance=False)
        for name, forecast in baseline_forecasts(series, splits).items()
    }
    logger.debug("Baselines scored on %d test windows", len(splits.test))
    return scores
