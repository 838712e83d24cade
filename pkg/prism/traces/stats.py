"""
Workload statistics: dynamic range and dominant periodicities of a series.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import fft as sp_fft

from prism.errors import SizingError, UndefinedRatioError
from prism.traces.series import DemandSeries

TOP_PERIODS = 3


@dataclass(frozen=True)
class SeriesStats:
    """
    Summary numbers for one demand series.

    ``dominant_periods_hours`` lists up to three spectral peaks, strongest
    first; a flat spectrum yields an empty list.
    """

    length: int
    mean: float
    peak: float
    trough: float
    peak_trough_ratio: float
    p97_5: float
    p2_5: float
    interval_ratio: float
    dominant_periods_hours: list[float]

    def to_dict(self) -> dict:
        return asdict(self)


def dominant_periods(
    values: np.ndarray, bucket_hours: float, top: int = TOP_PERIODS, floor_ratio: float = 4.0
) -> list[float]:
    """
    Periods (hours) of the strongest local maxima of the demeaned magnitude spectrum.

    A bin qualifies when it is a local maximum, exceeds ``floor_ratio`` times
    the median magnitude, and rises above round-off relative to the series
    scale. Taking local maxima keeps one bin per spectral line when a period
    falls between bins.
    """
    demeaned = values - values.mean()
    magnitude = np.abs(sp_fft.rfft(demeaned))
    magnitude[0] = 0.0
    if len(magnitude) < 2:
        return []
    scale = max(float(np.abs(values).max()), 1.0) * len(values)
    noise_floor = max(floor_ratio * float(np.median(magnitude[1:])), 1e-9 * scale)
    padded = np.concatenate([[-np.inf], magnitude, [-np.inf]])
    is_peak = (padded[1:-1] >= padded[:-2]) & (padded[1:-1] >= padded[2:])
    candidates = np.flatnonzero(is_peak & (magnitude > noise_floor))
    ranked = candidates[np.argsort(-magnitude[candidates], kind="stable")][:top]
    return [float(len(values) * bucket_hours / k) for k in ranked]


def stats(series: DemandSeries, eps_floor: float = 1e-6) -> SeriesStats:
    """
    Peak/trough ratio, p97.5/p2.5 interval ratio and dominant periods.

    Both ratios divide by ``max(denominator, eps_floor)`` so idle buckets do
    not divide by zero; an all-zero series has no meaningful ratio.
    """
    values = series.values
    if len(values) < 2:
        raise SizingError(f"statistics need at least 2 buckets, got {len(values)}")
    peak = float(values.max())
    if peak <= 0.0:
        raise UndefinedRatioError("peak-to-trough ratio is undefined for an all-zero series")
    trough = float(values.min())
    p_hi, p_lo = (float(v) for v in np.percentile(values, [97.5, 2.5]))
    return SeriesStats(
        length=len(values),
        mean=float(values.mean()),
        peak=peak,
        trough=trough,
        peak_trough_ratio=peak / max(trough, eps_floor),
        p97_5=p_hi,
        p2_5=p_lo,
        interval_ratio=p_hi / max(p_lo, eps_floor),
        dominant_periods_hours=dominant_periods(values, series.bucket_hours),
    )
