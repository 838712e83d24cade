"""
Component ablation: train every architecture variant on identical data and
seeds, then report mean test metrics and their percentage change relative to
the full model.
"""

from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from prism.errors import ConfigError, NumericError
from prism.eval.evaluate import evaluate_model, train_scale
from prism.eval.metrics import METRIC_NAMES, MetricSet, percent_delta
from prism.model import VARIANTS, PrismConfig, PrismModel
from prism.model.config import FULL
from prism.traces.series import DemandSeries
from prism.traces.windows import make_windows
from prism.training import TrainConfig, train
from prism.utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_SEEDS = (0, 1, 2)


@dataclass(frozen=True)
class VariantRun:
    """
    One (variant, seed) training run. ``error`` is set when it diverged.
    """

    variant: str
    seed: int
    raw: MetricSet | None = None
    zscored: MetricSet | None = None
    epochs: int = 0
    error: str | None = None

    @property
    def diverged(self) -> bool:
        return self.error is not None


@dataclass
class VariantSummary:
    """
    Seed-aggregated scores of one variant: means, min/max ranges and deltas.
    """

    variant: str
    runs: list[VariantRun]
    mean: dict[str, float | None] = field(default_factory=dict)
    low: dict[str, float | None] = field(default_factory=dict)
    high: dict[str, float | None] = field(default_factory=dict)
    zscored_mean: dict[str, float | None] = field(default_factory=dict)
    delta: dict[str, float | None] = field(default_factory=dict)

    @property
    def flagged(self) -> bool:
        return any(run.diverged for run in self.runs)

    @property
    def diverged_seeds(self) -> list[int]:
        return [run.seed for run in self.runs if run.diverged]


def _aggregate(values: list[float | None]) -> tuple[float | None, float | None, float | None]:
    present = [v for v in values if v is not None]
    if not present:
        return None, None, None
    return float(np.mean(present)), float(min(present)), float(max(present))


def summarize(variant: str, runs: list[VariantRun]) -> VariantSummary:
    summary = VariantSummary(variant, runs)
    finished = [run for run in runs if not run.diverged]
    for name in METRIC_NAMES:
        mean, low, high = _aggregate([run.raw.get(name) for run in finished if run.raw])
        summary.mean[name], summary.low[name], summary.high[name] = mean, low, high
        summary.zscored_mean[name] = _aggregate(
            [run.zscored.get(name) for run in finished if run.zscored]
        )[0]
    return summary


@dataclass
class AblationReport:
    """
    Per-variant summaries keyed by variant name, in canonical variant order.

    ``delta`` of every metric is ``percent_delta(variant mean, full mean)``.
    """

    seeds: list[int]
    variants: dict[str, VariantSummary]

    def __post_init__(self) -> None:
        reference = self.variants.get(FULL)
        for summary in self.variants.values():
            for name in METRIC_NAMES:
                base = reference.mean.get(name) if reference else None
                summary.delta[name] = percent_delta(summary.mean.get(name), base)

    @property
    def flagged(self) -> list[str]:
        return [name for name, summary in self.variants.items() if summary.flagged]

    def to_frame(self) -> pd.DataFrame:
        """
        One row per variant: mean, range and percentage delta of each metric.
        """
        rows = []
        for name, summary in self.variants.items():
            row: dict[str, object] = {"variant": name}
            for metric in METRIC_NAMES:
                row[metric] = summary.mean[metric]
                row[f"{metric}_low"] = summary.low[metric]
                row[f"{metric}_high"] = summary.high[metric]
                row[f"{metric}_delta_pct"] = summary.delta[metric]
            row["flagged"] = summary.flagged
            rows.append(row)
        return pd.DataFrame(rows)

    def to_dict(self) -> dict:
        return {
            "seeds": self.seeds,
            "flagged": self.flagged,
            "variants": {
                name: {
                    "mean": summary.mean,
                    "low": summary.low,
                    "high": summary.high,
                    "zscored_mean": summary.zscored_mean,
                    "delta_pct": summary.delta,
                    "diverged_seeds": summary.diverged_seeds,
                    "runs": [
                        {
                            "seed": run.seed,
                            "epochs": run.epochs,
                            "raw": None if run.raw is None else run.raw.as_dict(),
                            "zscored": None if run.zscored is None else run.zscored.as_dict(),
                            "error": run.error,
                        }
                        for run in summary.runs
                    ],
                }
                for name, summary in self.variants.items()
            },
        }


def run_ablation(
    series: DemandSeries,
    base_config: PrismConfig,
    train_config: TrainConfig,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    *,
    variants: Sequence[str] = VARIANTS,
    stride: int = 1,
    split: tuple[float, float, float] = (0.7, 0.15, 0.15),
    bits: int = 32,
    max_workers: int | None = None,
) -> AblationReport:
    """
    Train every variant once per seed and summarize test metrics.

    Runs execute in worker threads, each with its own model and RNG; results
    are merged by variant name so the report does not depend on scheduling.
    A run whose loss goes non-finite is flagged and the rest are still reported.
    """
    if not seeds:
        raise ConfigError("ablation needs at least one seed")
    unknown = [v for v in variants if v not in VARIANTS]
    if unknown:
        raise ConfigError(f"unknown variants: {', '.join(unknown)}")

    configs = {name: base_config.variant(name) for name in variants}
    window_sets = {}
    for name, config in configs.items():
        shape = (config.lookback, config.horizon)
        if shape not in window_sets:
            window_sets[shape] = make_windows(series, *shape, stride, split)
    scale = train_scale(series, split)

    def _run(job: tuple[str, int]) -> VariantRun:
        name, seed = job
        config = configs[name]
        splits = window_sets[(config.lookback, config.horizon)]
        model = PrismModel(config, seed=seed, bits=bits)
        try:
            result = train(model, splits, train_config.model_copy(update={"seed": seed}))
            evaluation = evaluate_model(model, splits.test, scale)
        except NumericError as exc:
            logger.warning("Variant %s (seed %d) diverged: %s", name, seed, exc)
            return VariantRun(name, seed, error=str(exc))
        return VariantRun(name, seed, evaluation.raw, evaluation.zscored, len(result.history.rows))

    jobs = [(name, seed) for name in variants for seed in seeds]
    workers = max_workers or min(len(jobs), 4)
    logger.info("Ablation: %d variants × %d seeds on %d worker(s)", len(variants), len(seeds), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        runs = list(pool.map(_run, jobs))

    by_variant: dict[str, list[VariantRun]] = {name: [] for name in variants}
    for run in runs:
        by_variant[run.variant].append(run)
    report = AblationReport(list(seeds), {name: summarize(name, by_variant[name]) for name in variants})
    for name in report.flagged:
        logger.warning("Variant %s flagged: diverged for seeds %s", name, report.variants[name].diverged_seeds)
    return report
