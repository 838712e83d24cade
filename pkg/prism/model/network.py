"""
The PRISM network: instance normalization and patch embedding, N stacked
encoder layers (attention, primitive decomposition, spectral refinement,
feed-forward), and a pooling head that denormalizes the forecast.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from prism.errors import ContractError, DimensionError, NumericError
from prism.model.config import PrismConfig
from prism.model.layers import (
    Dropout,
    Normalized,
    denormalize,
    diversity_loss,
    embed,
    ffn_block,
    mha_block,
    normalize_instance,
    predict_head,
    primitive_decompose,
    spectral_refine,
)
from prism.model.params import Scope, init_parameters, parameter_count
from prism.numcore import Tensor, dtype_for, no_grad, precision
from prism.numcore.flops import fft_flops


@dataclass
class LayerDiagnostics:
    """
    What one encoder layer did to a batch. Fields of disabled components stay ``None``.
    """

    attention: np.ndarray
    alpha: np.ndarray | None = None
    primitive_features: np.ndarray | None = None
    primitive_scores: np.ndarray | None = None
    local_attention: np.ndarray | None = None
    gate_mean: float | None = None
    low_energy: float | None = None
    high_energy: float | None = None


@dataclass
class EncoderDiagnostics:
    layers: list[LayerDiagnostics] = field(default_factory=list)

    def alphas(self) -> list[np.ndarray]:
        return [layer.alpha for layer in self.layers if layer.alpha is not None]

    def mean_alpha(self) -> np.ndarray | None:
        """
        Recipe weights averaged over layers: ``[B, K]``.
        """
        alphas = self.alphas()
        return np.mean(alphas, axis=0) if alphas else None

    def gate_means(self) -> list[float]:
        return [layer.gate_mean for layer in self.layers if layer.gate_mean is not None]

    def high_band_fractions(self) -> list[float]:
        fractions = []
        for layer in self.layers:
            if layer.low_energy is None or layer.high_energy is None:
                continue
            total = layer.low_energy + layer.high_energy
            fractions.append(layer.high_energy / total if total > 0 else 0.0)
        return fractions


@dataclass
class ForwardResult:
    """
    One forward pass: denormalized and normalized forecasts, the instance
    statistics, per-layer diagnostics and per-layer diversity losses.
    """

    prediction: Tensor
    normalized: Tensor
    stats: Normalized
    diagnostics: EncoderDiagnostics
    diversity_losses: list[Tensor]


class PrismModel:
    """
    Parameters plus architecture of one forecaster.

    Inference never mutates the instance, so a model can be shared across
    threads for prediction; training is single-writer.
    """

    def __init__(
        self,
        config: PrismConfig,
        seed: int = 0,
        bits: int = 32,
        params: dict[str, Tensor] | None = None,
    ) -> None:
        self.config = config
        self.seed = seed
        self.bits = bits
        self.dtype = dtype_for(bits)
        if params is None:
            params = init_parameters(config, np.random.default_rng(seed), self.dtype)
        self.params = params

    def __repr__(self) -> str:
        return (
            f"PrismModel(L={self.config.lookback}, H={self.config.horizon}, "
            f"N_p={self.config.n_patches}, D={self.config.d_model}, "
            f"params={self.parameter_count()}, bits={self.bits})"
        )

    def parameter_count(self) -> int:
        return sum(p.size for p in self.params.values())

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def state_arrays(self) -> dict[str, np.ndarray]:
        """
        Copies of every parameter array, in blob order.
        """
        return {name: p.data.copy() for name, p in self.params.items()}

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        if list(arrays) != list(self.params):
            raise ContractError("parameter names differ from this model's layout")
        for name, values in arrays.items():
            target = self.params[name]
            if values.shape != target.shape:
                raise DimensionError(f"{name}: expected {target.shape}, got {values.shape}")
            target.data = np.ascontiguousarray(values, dtype=self.dtype)

    def clone(self) -> PrismModel:
        twin = PrismModel(self.config, self.seed, self.bits)
        twin.load_state_arrays(self.state_arrays())
        return twin

    def forward(
        self,
        history: np.ndarray,
        stamps: np.ndarray,
        *,
        training: bool = False,
        rng: np.random.Generator | None = None,
        alpha_override: np.ndarray | None = None,
    ) -> ForwardResult:
        """
        Forecast ``[B, H]`` demand from ``[B, L]`` history and ``[B, >=L, 2]`` stamps.

        ``rng`` drives dropout when ``training`` is set; ``alpha_override``
        replaces the learned recipe weights in every layer.
        """
        cfg = self.config
        history = np.asarray(history)
        if history.ndim != 2 or history.shape[1] != cfg.lookback:
            raise DimensionError(f"history must be [B, {cfg.lookback}], got {list(history.shape)}")
        if not np.all(np.isfinite(history)):
            raise NumericError("history contains NaN or Inf")

        with precision(self.bits):
            drop = Dropout(cfg.dropout, rng, training)
            stats = normalize_instance(Tensor(history, dtype=self.dtype), cfg.eps)
            tokens = embed(stats.x, stamps, Scope(self.params, "embed"), cfg)
            diagnostics = EncoderDiagnostics()
            diversity: list[Tensor] = []

            for layer in range(cfg.n_layers):
                scope = Scope(self.params, f"layers.{layer}")
                tokens, attention = mha_block(tokens, scope.child("mha"), cfg, drop)
                record = LayerDiagnostics(attention)

                if cfg.use_primitive:
                    prim = primitive_decompose(tokens, scope.child("pdd"), cfg, alpha_override)
                    tokens = prim.out
                    diversity.append(diversity_loss(prim.features))
                    record.alpha = prim.alpha.data.copy()
                    record.primitive_features = prim.features.data.copy()
                    record.primitive_scores = prim.scores.data.copy()
                    record.local_attention = prim.local_attention

                if cfg.use_spectral:
                    spec = spectral_refine(tokens, scope.child("spectral"), cfg)
                    tokens = spec.out
                    record.gate_mean = spec.gate_mean
                    record.low_energy = spec.low_energy
                    record.high_energy = spec.high_energy

                tokens = ffn_block(tokens, scope.child("ffn"), cfg, drop)
                diagnostics.layers.append(record)

            normalized = predict_head(tokens, Scope(self.params, "head"))
            prediction = denormalize(normalized, stats)
        return ForwardResult(prediction, normalized, stats, diagnostics, diversity)

    def predict(self, history: np.ndarray, stamps: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """
        Denormalized forecasts without building a tape, evaluated in chunks.
        """
        history = np.asarray(history)
        if len(history) == 0:
            return np.zeros((0, self.config.horizon), dtype=self.dtype)
        chunks = []
        with no_grad():
            for begin in range(0, len(history), batch_size):
                end = begin + batch_size
                chunks.append(self.forward(history[begin:end], stamps[begin:end]).prediction.data)
        return np.concatenate(chunks, axis=0)


def forward(
    model: PrismModel, history: np.ndarray, stamps: np.ndarray
) -> tuple[Tensor, EncoderDiagnostics]:
    """
    Inference-mode forward returning the forecast and its diagnostics.
    """
    result = model.forward(history, stamps)
    return result.prediction, result.diagnostics


@dataclass(frozen=True)
class Complexity:
    """
    Static cost summary of a config.

    ``flops`` counts forward multiply-adds of the matmuls and FFTs for one
    instance; ``attention_flops`` is its quadratic part. ``inference_bound``
    is the per-layer ``N·(D² + K·D)`` parameter order.
    """

    n_patches: int
    parameters: int
    flops: int
    attention_flops: int
    inference_bound: int


def estimate_flops(config: PrismConfig, batch: int = 1) -> int:
    """
    Forward FLOPs as measured by ``count_flops`` for a batch of ``batch`` windows.
    """
    b, n, d = batch, config.n_patches, config.d_model
    k, h, p = config.n_primitives, config.horizon, config.patch
    total = 2 * b * n * p * d + 2 * b * n * 4 * d
    layer = 8 * b * n * d * d + 4 * b * n * n * d + 16 * b * n * d * d
    if config.use_primitive:
        layer += 6 * b * n * d * d + 4 * b * k * n * d + 2 * b * k * d + 2 * b * k * k * d
    if config.use_spectral:
        layer += 8 * b * n * d * d + 3 * fft_flops(n, b * d)
    total += config.n_layers * layer
    return total + 2 * b * d * d + 2 * b * d * h


def complexity(config: PrismConfig) -> Complexity:
    n, d = config.n_patches, config.d_model
    return Complexity(
        n_patches=n,
        parameters=parameter_count(config),
        flops=estimate_flops(config),
        attention_flops=config.n_layers * 4 * n * n * d,
        inference_bound=config.n_layers * (d * d + config.n_primitives * d),
    )
