"""
The building blocks of the PRISM encoder, as functions over a parameter ``Scope``.

Every block is post-norm: ``LN(x + block(x))``. Tensors keep the layout
``[batch, patches, width]``; multi-head views are ``[batch, heads, patches, d_k]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from prism.errors import ContractError, DimensionError
from prism.model.config import PrismConfig
from prism.model.params import Scope
from prism.numcore import (
    ComplexTensor,
    Tensor,
    band_masks,
    concat,
    cosine_similarity_pairs,
    dropout,
    gelu,
    irfft,
    layer_norm,
    rfft,
    sigmoid,
    softmax,
)


@dataclass(frozen=True)
class Dropout:
    """
    Inverted dropout bound to one forward pass.
    """

    rate: float
    rng: np.random.Generator | None = None
    training: bool = False

    def __call__(self, x: Tensor) -> Tensor:
        return dropout(x, self.rate, self.rng, self.training)


@dataclass(frozen=True)
class Normalized:
    """
    Instance-normalized history with the statistics needed to undo it.
    """

    x: Tensor
    mu: Tensor
    sigma: Tensor
    scale: Tensor


def normalize_instance(history: Tensor, eps: float = 1e-5) -> Normalized:
    """
    Rowwise ``(X − μ) / sqrt(σ² + ε)`` with the population standard deviation.
    """
    mu = history.mean(axis=1)
    centered = history - mu.reshape(-1, 1)
    variance = (centered * centered).mean(axis=1)
    scale = (variance + eps).sqrt()
    return Normalized(centered / scale.reshape(-1, 1), mu, variance.sqrt(), scale)


def denormalize(y_n: Tensor, stats: Normalized) -> Tensor:
    return y_n * stats.scale.reshape(-1, 1) + stats.mu.reshape(-1, 1)


def patch_indices(lookback: int, patch: int, stride: int) -> np.ndarray:
    """
    ``[N_p, P]`` positions of every patch; row ``i`` starts at ``i·S``.
    """
    count = (lookback - patch) // stride + 1
    return np.arange(count)[:, None] * stride + np.arange(patch)[None, :]


def temporal_features(stamps: np.ndarray) -> np.ndarray:
    """
    sin/cos of hour-of-day and day-of-week: ``[..., 2] -> [..., 4]``.
    """
    hour = 2.0 * np.pi * stamps[..., 0] / 24.0
    day = 2.0 * np.pi * stamps[..., 1] / 7.0
    return np.stack([np.sin(hour), np.cos(hour), np.sin(day), np.cos(day)], axis=-1)


def embed(x_n: Tensor, stamps: np.ndarray, scope: Scope, config: PrismConfig) -> Tensor:
    """
    Patch tokens projected by ``W_p`` plus an affine map of each patch's last stamp.
    """
    batch, lookback = x_n.shape
    stamps = np.asarray(stamps)
    expected = stamps.ndim == 3 and stamps.shape[0] == batch and stamps.shape[2] == 2
    if not expected or stamps.shape[1] < lookback:
        raise DimensionError(
            f"stamps must be [{batch}, >= {lookback}, 2] for a [{batch}, {lookback}] history, "
            f"got {list(stamps.shape)}"
        )
    index = patch_indices(lookback, config.patch, config.stride)
    tokens = x_n[:, index] @ scope["W_p"]
    calendar = Tensor(temporal_features(stamps[:, index[:, -1]]), dtype=x_n.dtype)
    return tokens + calendar @ scope["W_t"] + scope["b_t"]


def split_heads(x: Tensor, n_heads: int) -> Tensor:
    batch, length, width = x.shape
    return x.reshape(batch, length, n_heads, width // n_heads).transpose(0, 2, 1, 3)


def merge_heads(x: Tensor) -> Tensor:
    batch, n_heads, length, d_k = x.shape
    return x.transpose(0, 2, 1, 3).reshape(batch, length, n_heads * d_k)


def mha_block(
    x: Tensor, scope: Scope, config: PrismConfig, drop: Dropout
) -> tuple[Tensor, np.ndarray]:
    """
    Full self-attention over patches; returns the block output and the
    ``[B, N_H, N_p, N_p]`` attention weights.
    """
    heads = config.n_heads
    q = split_heads(x @ scope["W_q"], heads)
    k = split_heads(x @ scope["W_k"], heads)
    v = split_heads(x @ scope["W_v"], heads)
    weights = softmax(q @ k.swapaxes(-1, -2) * (1.0 / math.sqrt(config.head_dim)), axis=-1)
    attended = merge_heads(weights @ v) @ scope["W_o"]
    out = layer_norm(x + drop(attended), scope["ln.gain"], scope["ln.bias"], config.eps)
    return out, weights.data


@dataclass(frozen=True)
class PrimitiveOutput:
    """
    Result of decomposing one layer's tokens over the primitive dictionary.

    ``features`` is 𝓕_prim ``[B, K, D]``; ``scores`` the mean pre-softmax
    logits s̄ ``[B, K]``; ``local_attention`` the per-head A ``[B, N_H, K, N_p]``.
    """

    out: Tensor
    alpha: Tensor
    features: Tensor
    scores: Tensor
    local_attention: np.ndarray


def _override_weights(alpha: np.ndarray, batch: int, k: int, dtype: np.dtype) -> Tensor:
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape == (k,):
        alpha = np.broadcast_to(alpha, (batch, k))
    if alpha.shape != (batch, k):
        raise DimensionError(
            f"alpha override must be [{k}] or [{batch}, {k}], got {list(alpha.shape)}"
        )
    if np.any(alpha < 0) or not np.allclose(alpha.sum(axis=1), 1.0, atol=1e-6):
        raise ContractError("alpha override rows must be non-negative and sum to 1")
    return Tensor(alpha, dtype=dtype)


def primitive_decompose(
    x: Tensor, scope: Scope, config: PrismConfig, alpha_override: np.ndarray | None = None
) -> PrimitiveOutput:
    """
    Local attention of the K learnable queries over the patches, then a
    softmax-weighted recipe of the resulting primitive features added back
    to every token.
    """
    batch, length, width = x.shape
    k, heads, d_k = config.n_primitives, config.n_heads, config.head_dim
    keys = split_heads(x @ scope["W_K"], heads)
    values = split_heads(x @ scope["W_V"], heads)
    queries = scope["Q_p"].reshape(k, heads, d_k).transpose(1, 0, 2)

    logits = queries @ keys.swapaxes(-1, -2) * (1.0 / math.sqrt(d_k))
    local = softmax(logits, axis=-1)
    features = (local @ values).transpose(0, 2, 1, 3).reshape(batch, k, width)
    scores = logits.mean(axis=(1, 3))
    if alpha_override is None:
        alpha = softmax(scores, axis=-1)
    else:
        alpha = _override_weights(alpha_override, batch, k, x.dtype)

    recipe = alpha.reshape(batch, 1, k) @ features
    mixed = recipe.broadcast_to((batch, length, width)) @ scope["W_O"]
    out = layer_norm(x + mixed, scope["ln.gain"], scope["ln.bias"], config.eps)
    return PrimitiveOutput(out, alpha, features, scores, local.data)


def diversity_loss(features: Tensor) -> Tensor:
    """
    Mean cosine similarity over the batch and every unordered primitive pair.
    """
    batch, k, _ = features.shape
    if k < 2:
        raise ContractError("diversity loss needs at least two primitives")
    pairs = np.triu(np.ones((k, k)), 1)
    sims = cosine_similarity_pairs(features) * Tensor(pairs, dtype=features.dtype)
    return sims.sum() * (1.0 / (batch * k * (k - 1) / 2))


@dataclass(frozen=True)
class SpectralOutput:
    """
    Result of one spectral refinement: output tokens, mean gate value and the
    filtered-spectrum energy in each band (summed over batch and channels).
    """

    out: Tensor
    gate_mean: float
    low_energy: float
    high_energy: float


def spectral_refine(x: Tensor, scope: Scope, config: PrismConfig) -> SpectralOutput:
    """
    Filter the patch-axis spectrum, split it at the cutoff, project each band
    back to the token domain and fuse the bands through a sigmoid gate.
    """
    length = x.shape[1]
    bins, cutoff = config.n_bins, config.cutoff
    spectrum = rfft(x, axis=1) * ComplexTensor(scope["W_freq_re"], scope["W_freq_im"])
    low_mask, high_mask = band_masks(bins, cutoff)
    low = irfft(spectrum * Tensor(low_mask.reshape(bins, 1), dtype=x.dtype), length, axis=1)
    high = irfft(spectrum * Tensor(high_mask.reshape(bins, 1), dtype=x.dtype), length, axis=1)
    x_low = low @ scope["W_low"]
    x_high = high @ scope["W_high"]

    gate = sigmoid(concat([x_low, x_high], axis=-1) @ scope["W_g"] + scope["b_g"])
    fused = gate * x_low + (1.0 - gate) * x_high
    out = layer_norm(x + fused, scope["ln.gain"], scope["ln.bias"], config.eps)

    energy = spectrum.energy()
    return SpectralOutput(
        out,
        gate_mean=float(gate.data.mean()),
        low_energy=float(energy[:, :cutoff].sum()),
        high_energy=float(energy[:, cutoff:].sum()),
    )


def ffn_block(x: Tensor, scope: Scope, config: PrismConfig, drop: Dropout) -> Tensor:
    hidden = drop(gelu(x @ scope["W_1"] + scope["b_1"]))
    return layer_norm(
        x + hidden @ scope["W_2"] + scope["b_2"], scope["ln.gain"], scope["ln.bias"], config.eps
    )


def predict_head(x: Tensor, scope: Scope) -> Tensor:
    """
    Mean-pool the patches and map to the normalized horizon ``[B, H]``.

    Patches are sorted per channel before summing so the pooled value does not
    depend on patch order, not even in the last bit.
    """
    pooled = x.sort(axis=1).mean(axis=1)
    return gelu(pooled @ scope["W_1"] + scope["b_1"]) @ scope["W_2"] + scope["b_2"]
