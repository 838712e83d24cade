"""
Point-forecast metrics over a whole evaluation set.

R² is computed globally over every (window, lead) point with the total sum of
squares taken about the evaluation-set mean, not averaged per window.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from prism.errors import DegenerateVarianceError, DimensionError, NumericError, SizingError

METRIC_NAMES = ("mse", "mae", "rmse", "r2")


@dataclass(frozen=True)
class MetricSet:
    """
    MSE, MAE, RMSE and R² of one forecast set. ``r2`` is ``None`` only when
    the caller allowed a constant target.
    """

    mse: float
    mae: float
    rmse: float
    r2: float | None

    def as_dict(self) -> dict[str, float | None]:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> MetricSet:
        return cls(**{name: values[name] for name in METRIC_NAMES})

    def get(self, name: str) -> float | None:
        return getattr(self, name)


class ZScale(NamedTuple):
    """
    Affine map ``(v - center) / spread`` shared by predictions and targets.
    """

    center: float
    spread: float

    @classmethod
    def from_values(cls, values: np.ndarray) -> ZScale:
        values = np.asarray(values, dtype=np.float64)
        spread = float(values.std())
        if values.size == 0 or spread == 0.0:
            raise DegenerateVarianceError("cannot z-score against a constant reference")
        return cls(float(values.mean()), spread)

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.center) / self.spread


def metrics(predicted: np.ndarray, actual: np.ndarray, *, require_variance: bool = True) -> MetricSet:
    """
    Score ``predicted`` against ``actual`` (any matching shapes).

    A constant ``actual`` leaves R² undefined: that raises
    ``DegenerateVarianceError`` unless ``require_variance`` is off, in which
    case ``r2`` is reported as ``None``.
    """
    pred = np.asarray(predicted, dtype=np.float64)
    true = np.asarray(actual, dtype=np.float64)
    if pred.shape != true.shape:
        raise DimensionError(f"predictions {pred.shape} and targets {true.shape} differ in shape")
    if true.size == 0:
        raise SizingError("metrics need at least one point")
    if not (np.isfinite(pred).all() and np.isfinite(true).all()):
        raise NumericError("predictions or targets contain NaN or Inf")

    residual = (pred - true).ravel()
    mse = float(np.mean(residual**2))
    mae = float(np.mean(np.abs(residual)))
    centered = true.ravel() - true.mean()
    ss_tot = float(centered @ centered)
    if ss_tot == 0.0:
        if require_variance:
            raise DegenerateVarianceError("R² is undefined for a constant target set")
        r2 = None
    else:
        r2 = 1.0 - float(residual @ residual) / ss_tot
    return MetricSet(mse=mse, mae=mae, rmse=math.sqrt(mse), r2=r2)


def zscored_metrics(
    predicted: np.ndarray, actual: np.ndarray, scale: ZScale, *, require_variance: bool = True
) -> MetricSet:
    """
    Metrics after mapping both sides through ``scale``; R² is unchanged.
    """
    return metrics(scale.apply(predicted), scale.apply(actual), require_variance=require_variance)


def percent_delta(value: float | None, reference: float | None) -> float | None:
    """
    ``100 · (value − reference) / |reference|``; ``None`` when either side is
    missing or the reference is zero.
    """
    if value is None or reference is None or reference == 0.0:
        return None
    return 100.0 * (value - reference) / abs(reference)
