"""
Model evaluation on held-out windows: raw and z-scored metrics, prediction
overlays, the 24-hour profile of actual vs predicted demand, per-series-key
scores and the horizon sweep.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd

from prism.errors import DegenerateVarianceError, DimensionError, SizingError
from prism.eval.metrics import MetricSet, ZScale, metrics, zscored_metrics
from prism.model import PrismConfig, PrismModel
from prism.traces.series import DemandSeries
from prism.traces.windows import WindowBatch, make_windows, split_bounds
from prism.training import TrainConfig, train
from prism.utils.logger import get_logger, log_safe

logger = get_logger(__name__)

SWEEP_HORIZONS = (6, 12, 24, 48)
PLOT_COLUMNS = ["time", "actual", "predicted"]
TIME_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


@dataclass(frozen=True, eq=False)
class Evaluation:
    """
    Forecasts of one model on one window set with their scores.
    """

    windows: WindowBatch
    predicted: np.ndarray
    raw: MetricSet
    zscored: MetricSet | None = None
    series_key: str | None = None

    @property
    def actual(self) -> np.ndarray:
        return self.windows.Y

    def to_dict(self) -> dict:
        return {
            "windows": len(self.windows),
            "horizon": self.windows.horizon,
            "raw": self.raw.as_dict(),
            "zscored": None if self.zscored is None else self.zscored.as_dict(),
        }

    def plot_frame(self) -> pd.DataFrame:
        """
        ``time,actual,predicted[,series_key]`` with one row per target time.

        Where windows overlap, the forecast from the latest origin (the
        shortest lead) is kept.
        """
        horizon = self.windows.horizon
        frame = pd.DataFrame(
            {
                "time": self.windows.target_times(),
                "origin": np.repeat(self.windows.origins, horizon),
                "actual": self.actual.reshape(-1),
                "predicted": self.predicted.reshape(-1),
            }
        )
        frame = frame.sort_values(["time", "origin"], kind="stable").drop_duplicates("time", keep="last")
        frame["time"] = pd.DatetimeIndex(frame["time"]).strftime(TIME_FORMAT)
        frame = frame[PLOT_COLUMNS].reset_index(drop=True)
        if self.series_key is not None:
            frame["series_key"] = self.series_key
        return frame


def train_scale(series: DemandSeries, split: tuple[float, float, float]) -> ZScale | None:
    """
    Z-score reference taken from the training segment; ``None`` if it is constant.
    """
    begin, end = split_bounds(len(series), split)[0]
    try:
        return ZScale.from_values(series.values[begin:end])
    except DegenerateVarianceError:
        return None


def evaluate_model(
    model: PrismModel,
    windows: WindowBatch,
    scale: ZScale | None = None,
    *,
    series_key: str | None = None,
    require_variance: bool = True,
) -> Evaluation:
    """
    Predict every window and score the denormalized forecasts.
    """
    if len(windows) == 0:
        raise SizingError("no windows to evaluate")
    if windows.horizon != model.config.horizon:
        raise DimensionError(
            f"windows have H={windows.horizon} but the model forecasts H={model.config.horizon}"
        )
    predicted = model.predict(windows.X, windows.stamps).astype(np.float64)
    raw = metrics(predicted, windows.Y, require_variance=require_variance)
    zscored = None
    if scale is not None:
        zscored = zscored_metrics(predicted, windows.Y, scale, require_variance=require_variance)
    return Evaluation(windows, predicted, raw, zscored, series_key)


def diurnal_profile(evaluation: Evaluation) -> pd.DataFrame:
    """
    Mean actual and predicted demand per hour of day over every target point.

    Always 24 rows; hours without points have ``count`` 0 and empty means.
    """
    hours = evaluation.windows.target_times().hour
    frame = pd.DataFrame(
        {
            "hour": hours,
            "actual": evaluation.actual.reshape(-1),
            "predicted": evaluation.predicted.reshape(-1),
        }
    )
    frame["abs_error"] = (frame["predicted"] - frame["actual"]).abs()
    grouped = frame.groupby("hour")
    profile = grouped[["actual", "predicted", "abs_error"]].mean()
    profile["count"] = grouped.size()
    profile = profile.reindex(range(24))
    profile["count"] = profile["count"].fillna(0).astype(int)
    return profile.rename_axis("hour").reset_index()


def per_key_evaluations(
    model: PrismModel,
    series_by_key: Mapping[str, DemandSeries],
    stride: int = 1,
    split: tuple[float, float, float] = (0.7, 0.15, 0.15),
) -> dict[str, Evaluation]:
    """
    Evaluate ``model`` on the test split of every keyed series.

    Keys too short to yield test windows are skipped with a warning; constant
    keys are scored with ``r2`` left empty.
    """
    cfg = model.config
    results: dict[str, Evaluation] = {}
    for key, series in series_by_key.items():
        if len(series) < cfg.lookback + cfg.horizon:
            logger.warning("Series key %s is too short to evaluate; skipped", log_safe(key))
            continue
        test = make_windows(series, cfg.lookback, cfg.horizon, stride, split).test
        if len(test) == 0:
            logger.warning("Series key %s has no test windows; skipped", log_safe(key))
            continue
        results[key] = evaluate_model(
            model, test, train_scale(series, split), series_key=key, require_variance=False
        )
    return results


def horizon_sweep(
    series: DemandSeries,
    model_config: PrismConfig,
    train_config: TrainConfig,
    horizons: Sequence[int] = SWEEP_HORIZONS,
    *,
    stride: int = 1,
    split: tuple[float, float, float] = (0.7, 0.15, 0.15),
    seed: int = 0,
    bits: int = 32,
) -> dict[int, Evaluation]:
    """
    Train one model per horizon on identical data and score each on its test split.
    """
    scale = train_scale(series, split)
    results: dict[int, Evaluation] = {}
    for horizon in horizons:
        config = PrismConfig.model_validate({**model_config.model_dump(), "horizon": horizon})
        splits = make_windows(series, config.lookback, horizon, stride, split)
        model = PrismModel(config, seed=seed, bits=bits)
        train(model, splits, train_config)
        results[horizon] = evaluate_model(model, splits.test, scale)
        logger.info("Horizon %d: test MSE %.5f, R² %s", horizon, results[horizon].raw.mse, results[horizon].raw.r2)
    return results
