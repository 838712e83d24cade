"""
Interpretability export: which primitive dominates each window's recipe, what
each primitive decodes to on its own, and how the spectral gates split energy.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import permutations

import numpy as np
import pandas as pd

from prism.errors import SizingError
from prism.eval.evaluate import TIME_FORMAT
from prism.eval.metrics import MetricSet, metrics
from prism.model import PrismModel
from prism.numcore import no_grad
from prism.traces.windows import WindowBatch
from prism.utils.logger import get_logger

logger = get_logger(__name__)

DOMINANCE_MARGIN = 0.05
NO_DOMINANT = -1
NO_DOMINANT_LABEL = "no dominant primitive"
REPORT_CHUNK = 256


def dominant_primitive(alpha: np.ndarray, margin: float = DOMINANCE_MARGIN) -> np.ndarray:
    """
    ``argmax_k α_k`` per row, or ``NO_DOMINANT`` when ``max α < 1/K + margin``.
    """
    alpha = np.asarray(alpha)
    if alpha.ndim != 2 or alpha.shape[1] == 0:
        return np.full(alpha.shape[0] if alpha.ndim else 0, NO_DOMINANT, dtype=np.int64)
    winners = np.argmax(alpha, axis=1).astype(np.int64)
    winners[alpha.max(axis=1) < 1.0 / alpha.shape[1] + margin] = NO_DOMINANT
    return winners


def primitive_label(index: int) -> str:
    return NO_DOMINANT_LABEL if index == NO_DOMINANT else f"primitive-{index}"


def separation_score(group_a: np.ndarray, group_b: np.ndarray) -> float:
    """
    Best fraction of windows labelled consistently when group A is assigned one
    dominant primitive and group B a different one.

    Windows without a dominant primitive always count as mislabelled.
    """
    total = len(group_a) + len(group_b)
    if total == 0:
        return 0.0
    counts_a, counts_b = Counter(group_a.tolist()), Counter(group_b.tolist())
    labels = sorted((set(counts_a) | set(counts_b)) - {NO_DOMINANT})
    best = 0
    for label_a, label_b in permutations(labels, 2):
        best = max(best, counts_a[label_a] + counts_b[label_b])
    return best / total


@dataclass(frozen=True, eq=False)
class ForecastReport:
    """
    Predictions of a model on a window set plus everything needed to explain them.

    ``alpha`` is the layer-averaged recipe ``[B, K]`` and ``layer_alpha`` the
    per-layer recipes ``[N, B, K]``; both have ``K = 0`` for variants without a
    primitive dictionary. ``signatures[k]`` is the normalized forecast decoded
    from a one-hot recipe on primitive ``k``, averaged over windows.
    """

    windows: WindowBatch
    predicted: np.ndarray
    scores: MetricSet | None
    alpha: np.ndarray
    layer_alpha: np.ndarray
    dominant: np.ndarray
    signatures: np.ndarray
    gate_means: list[float]
    low_energy: list[float]
    high_energy: list[float]
    margin: float = DOMINANCE_MARGIN

    @property
    def n_primitives(self) -> int:
        return self.alpha.shape[1]

    def labels(self) -> list[str]:
        return [primitive_label(int(i)) for i in self.dominant]

    def dominance_shares(self) -> dict[str, float]:
        """
        Fraction of windows per dominant-primitive label.
        """
        counts = Counter(self.labels())
        return {label: counts[label] / len(self.dominant) for label in sorted(counts)}

    def high_band_fractions(self) -> list[float]:
        fractions = []
        for low, high in zip(self.low_energy, self.high_energy, strict=True):
            total = low + high
            fractions.append(high / total if total > 0 else 0.0)
        return fractions

    def alpha_frame(self) -> pd.DataFrame:
        """
        Heatmap data: one row per window (first target time), one column per primitive.
        """
        first_target = self.windows.target_times()[:: self.windows.horizon]
        frame = pd.DataFrame(
            self.alpha, columns=[f"alpha_{k}" for k in range(self.n_primitives)]
        )
        frame.insert(0, "origin", self.windows.origins)
        frame.insert(0, "time", first_target.strftime(TIME_FORMAT))
        frame["dominant"] = self.labels()
        return frame

    def signature_frame(self) -> pd.DataFrame:
        """
        One row per lead, one column per primitive signature.
        """
        frame = pd.DataFrame(
            self.signatures.T, columns=[f"primitive_{k}" for k in range(self.n_primitives)]
        )
        frame.insert(0, "lead", np.arange(1, self.windows.horizon + 1))
        return frame

    def summary(self) -> dict:
        return {
            "windows": len(self.windows),
            "n_primitives": self.n_primitives,
            "margin": self.margin,
            "metrics": None if self.scores is None else self.scores.as_dict(),
            "dominance_shares": self.dominance_shares(),
            "no_dominant_windows": int(np.sum(self.dominant == NO_DOMINANT)),
            "mean_alpha": self.alpha.mean(axis=0).tolist() if len(self.alpha) else [],
            "gate_means": self.gate_means,
            "band_energy": [
                {"low": low, "high": high, "high_fraction": fraction}
                for low, high, fraction in zip(
                    self.low_energy, self.high_energy, self.high_band_fractions(), strict=True
                )
            ],
        }


def _chunks(windows: WindowBatch, size: int):
    for begin in range(0, len(windows), size):
        yield windows.subset(np.arange(begin, min(begin + size, len(windows))))


def primitive_signatures(model: PrismModel, windows: WindowBatch, batch_size: int = REPORT_CHUNK) -> np.ndarray:
    """
    ``[K, H]``: the mean normalized forecast when every layer's recipe is one-hot on ``k``.
    """
    cfg = model.config
    if not cfg.use_primitive:
        return np.zeros((0, cfg.horizon))
    sums = np.zeros((cfg.n_primitives, cfg.horizon))
    with no_grad():
        for chunk in _chunks(windows, batch_size):
            for k in range(cfg.n_primitives):
                override = np.zeros((len(chunk), cfg.n_primitives))
                override[:, k] = 1.0
                result = model.forward(chunk.X, chunk.stamps, alpha_override=override)
                sums[k] += result.normalized.data.astype(np.float64).sum(axis=0)
    return sums / len(windows)


def interpretability_report(
    model: PrismModel,
    windows: WindowBatch,
    margin: float = DOMINANCE_MARGIN,
    batch_size: int = REPORT_CHUNK,
    *,
    score: bool = True,
) -> ForecastReport:
    """
    Run ``model`` over ``windows`` and collect recipes, signatures and spectral statistics.

    Set ``score`` to False for windows without known targets (a live forecast).
    """
    if len(windows) == 0:
        raise SizingError("no windows to explain")
    cfg = model.config
    predictions, layer_alphas = [], []
    gate_sums = np.zeros(cfg.n_layers)
    low = np.zeros(cfg.n_layers)
    high = np.zeros(cfg.n_layers)
    with no_grad():
        for chunk in _chunks(windows, batch_size):
            result = model.forward(chunk.X, chunk.stamps)
            predictions.append(result.prediction.data.astype(np.float64))
            layers = result.diagnostics.layers
            if cfg.use_primitive:
                layer_alphas.append(np.stack([layer.alpha for layer in layers]))
            if cfg.use_spectral:
                gate_sums += len(chunk) * np.array([layer.gate_mean for layer in layers])
                low += [layer.low_energy for layer in layers]
                high += [layer.high_energy for layer in layers]

    predicted = np.concatenate(predictions, axis=0)
    if layer_alphas:
        layer_alpha = np.concatenate(layer_alphas, axis=1).astype(np.float64)
    else:
        layer_alpha = np.zeros((0, len(windows), 0))
    alpha = layer_alpha.mean(axis=0) if len(layer_alpha) else np.zeros((len(windows), 0))
    spectral = cfg.use_spectral
    report = ForecastReport(
        windows=windows,
        predicted=predicted,
        scores=metrics(predicted, windows.Y, require_variance=False) if score else None,
        alpha=alpha,
        layer_alpha=layer_alpha,
        dominant=dominant_primitive(alpha, margin),
        signatures=primitive_signatures(model, windows, batch_size),
        gate_means=(gate_sums / len(windows)).tolist() if spectral else [],
        low_energy=low.tolist() if spectral else [],
        high_energy=high.tolist() if spectral else [],
        margin=margin,
    )
    logger.info(
        "Explained %d windows: %d without a dominant primitive",
        len(windows),
        int(np.sum(report.dominant == NO_DOMINANT)),
    )
    return report
