"""
Report writers: JSON for machines, CSV for tables and plot data.

File names are fixed so a run directory always has the same layout.
"""

from __future__ import annotations

from collections.abc import Mapping
from pathlib import Path

import pandas as pd

from prism.eval.ablation import AblationReport
from prism.eval.evaluate import Evaluation, diurnal_profile
from prism.eval.interpret import ForecastReport
from prism.eval.metrics import METRIC_NAMES, MetricSet
from prism.utils.io import atomic_to_csv, atomic_write_json
from prism.utils.logger import get_logger, log_safe

logger = get_logger(__name__)

FLOAT_FORMAT = "%.10g"

METRICS_FILE = "metrics.json"
PLOT_FILE = "predictions.csv"
DIURNAL_FILE = "diurnal_profile.csv"
BASELINES_FILE = "baselines.csv"
PER_KEY_FILE = "per_key.csv"
SWEEP_FILE = "horizon_sweep.csv"
ABLATION_JSON = "ablation.json"
ABLATION_CSV = "ablation.csv"
INTERPRET_JSON = "interpretability.json"
ALPHA_FILE = "alpha.csv"
SIGNATURE_FILE = "signatures.csv"


def _csv(frame: pd.DataFrame, path: Path) -> Path:
    return atomic_to_csv(frame, path, index=False, float_format=FLOAT_FORMAT)


def metric_rows(scores: Mapping[str, MetricSet], key: str = "name") -> pd.DataFrame:
    return pd.DataFrame([{key: name, **score.as_dict()} for name, score in scores.items()])


def write_evaluation(
    evaluation: Evaluation,
    directory: Path | str,
    baselines: Mapping[str, MetricSet] | None = None,
) -> list[Path]:
    """
    ``metrics.json`` (model and baselines), the prediction overlay and the diurnal profile.
    """
    target = Path(directory)
    document = {"model": evaluation.to_dict()}
    if baselines is not None:
        document["baselines"] = {name: score.as_dict() for name, score in baselines.items()}
    written = [
        atomic_write_json(target / METRICS_FILE, document),
        _csv(evaluation.plot_frame(), target / PLOT_FILE),
        _csv(diurnal_profile(evaluation), target / DIURNAL_FILE),
    ]
    if baselines is not None:
        written.append(_csv(metric_rows(baselines, "baseline"), target / BASELINES_FILE))
    logger.success("Evaluation written to %s", log_safe(target))
    return written


def write_per_key(evaluations: Mapping[str, Evaluation], directory: Path | str) -> list[Path]:
    """
    One metrics row per series key plus a stacked overlay with a ``series_key`` column.
    """
    target = Path(directory)
    rows = []
    for key, evaluation in evaluations.items():
        row = {"series_key": key, "windows": len(evaluation.windows), **evaluation.raw.as_dict()}
        if evaluation.zscored is not None:
            row.update({f"z_{name}": evaluation.zscored.get(name) for name in METRIC_NAMES})
        rows.append(row)
    overlays = [evaluation.plot_frame() for evaluation in evaluations.values()]
    plot = pd.concat(overlays, ignore_index=True) if overlays else pd.DataFrame(
        columns=["time", "actual", "predicted", "series_key"]
    )
    return [
        _csv(pd.DataFrame(rows), target / PER_KEY_FILE),
        _csv(plot, target / f"per_key_{PLOT_FILE}"),
    ]


def write_horizon_sweep(results: Mapping[int, Evaluation], directory: Path | str) -> Path:
    rows = []
    for horizon, evaluation in sorted(results.items()):
        row = {"horizon": horizon, **evaluation.raw.as_dict()}
        if evaluation.zscored is not None:
            row.update({f"z_{name}": evaluation.zscored.get(name) for name in METRIC_NAMES})
        rows.append(row)
    return _csv(pd.DataFrame(rows), Path(directory) / SWEEP_FILE)


def write_ablation(report: AblationReport, directory: Path | str) -> list[Path]:
    target = Path(directory)
    written = [
        atomic_write_json(target / ABLATION_JSON, report.to_dict()),
        _csv(report.to_frame(), target / ABLATION_CSV),
    ]
    logger.success("Ablation report written to %s", log_safe(target))
    return written


def write_forecast_report(report: ForecastReport, directory: Path | str) -> list[Path]:
    """
    The summary JSON, the α heatmap data and the primitive signatures.
    """
    target = Path(directory)
    written = [
        atomic_write_json(target / INTERPRET_JSON, report.summary()),
        _csv(report.alpha_frame(), target / ALPHA_FILE),
        _csv(report.signature_frame(), target / SIGNATURE_FILE),
    ]
    logger.success("Interpretability report written to %s", log_safe(target))
    return written
