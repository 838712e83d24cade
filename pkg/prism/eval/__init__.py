"""
Metrics, reference baselines, the component ablation and interpretability reports.
"""

from prism.eval.ablation import AblationReport, VariantRun, VariantSummary, run_ablation
from prism.eval.baselines import BASELINES, LinearForecaster, baseline_forecasts, baselines
from prism.eval.evaluate import (
    SWEEP_HORIZONS,
    Evaluation,
    diurnal_profile,
    evaluate_model,
    horizon_sweep,
    per_key_evaluations,
    train_scale,
)
from prism.eval.interpret import (
    NO_DOMINANT,
    NO_DOMINANT_LABEL,
    ForecastReport,
    dominant_primitive,
    interpretability_report,
    separation_score,
)
from prism.eval.metrics import MetricSet, ZScale, metrics, percent_delta, zscored_metrics

__all__ = [
    "BASELINES",
    "NO_DOMINANT",
    "NO_DOMINANT_LABEL",
    "SWEEP_HORIZONS",
    "AblationReport",
    "Evaluation",
    "ForecastReport",
    "LinearForecaster",
    "MetricSet",
    "VariantRun",
    "VariantSummary",
    "ZScale",
    "baseline_forecasts",
    "baselines",
    "diurnal_profile",
    "dominant_primitive",
    "evaluate_model",
    "horizon_sweep",
    "interpretability_report",
    "metrics",
    "per_key_evaluations",
    "percent_delta",
    "run_ablation",
    "separation_score",
    "train_scale",
    "zscored_metrics",
]
