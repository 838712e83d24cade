"""
Differentiable functional ops built on ``Tensor``.

Each op computes its forward with numpy/scipy and registers a closed-form
vector-Jacobian product. Fused ops (softmax, layer norm, GELU) save only what
their backward rule needs.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from scipy import special

from prism.errors import ContractError, DimensionError, NumericError
from prism.numcore.tensor import Tensor, _make

_SQRT_HALF = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _check_axis(x: Tensor, axis: int) -> int:
    if not -x.ndim <= axis < x.ndim:
        raise ContractError(f"axis {axis} out of range for shape {x.shape}")
    return axis % x.ndim


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """
    Numerically stable softmax (max-subtracted) along ``axis``.
    """
    axis = _check_axis(x, axis)
    if np.isnan(x.data).any():
        raise NumericError(f"softmax input contains NaN (shape {x.shape})")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)

    def vjp(g: np.ndarray):
        return (s * (g - (g * s).sum(axis=axis, keepdims=True)),)

    return _make(s, (x,), "softmax", vjp, saved=(s,))


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """
    Normalize the last axis to zero mean / unit variance, then scale and shift.

    Uses the population variance; a constant row maps to ``bias``.
    """
    width = x.shape[-1]
    if gain.shape != (width,) or bias.shape != (width,):
        raise DimensionError(
            f"layer_norm gain/bias {gain.shape}/{bias.shape} do not match last extent of {x.shape}"
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv
    gamma = gain.data
    reduce_axes = tuple(range(x.ndim - 1))

    def vjp(g: np.ndarray):
        dxhat = g * gamma
        dx = inv * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        return dx, (g * xhat).sum(axis=reduce_axes), g.sum(axis=reduce_axes)

    return _make(xhat * gamma + bias.data, (x, gain, bias), "layer_norm", vjp, saved=(xhat, inv))


def sigmoid(x: Tensor) -> Tensor:
    s = special.expit(x.data)
    return _make(s, (x,), "sigmoid", lambda g: (g * s * (1.0 - s),), saved=(s,))


def gelu(x: Tensor) -> Tensor:
    """
    Exact GELU, x·Φ(x), with Φ the standard normal CDF.
    """
    a = x.data
    cdf = 0.5 * (1.0 + special.erf(a * _SQRT_HALF))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * a * a)
    return _make(a * cdf, (x,), "gelu", lambda g: (g * (cdf + a * pdf),), saved=(a, cdf))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    if not tensors:
        raise ContractError("concat needs at least one tensor")
    axis = _check_axis(tensors[0], axis)
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        shapes = ", ".join(str(t.shape) for t in tensors)
        raise DimensionError(f"concat extents differ: {shapes}") from exc
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def vjp(g: np.ndarray):
        return tuple(np.split(g, bounds, axis=axis))

    return _make(out, tuple(tensors), "concat", vjp)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    return concat([t.reshape(t.shape[:axis] + (1,) + t.shape[axis:]) for t in tensors], axis=axis)


def dropout(x: Tensor, rate: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    """
    Inverted dropout; identity at inference or when ``rate`` is 0.
    """
    if not training or rate <= 0.0 or rng is None:
        return x
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return x * Tensor(keep, dtype=x.dtype)


def mse(pred: Tensor, target: Tensor) -> Tensor:
    if pred.shape != target.shape:
        raise DimensionError(f"prediction {pred.shape} and target {target.shape} differ")
    diff = pred - target
    return (diff * diff).mean()


def mae(pred: Tensor, target: Tensor) -> Tensor:
    if pred.shape != target.shape:
        raise DimensionError(f"prediction {pred.shape} and target {target.shape} differ")
    return (pred - target).abs().mean()


def cosine_similarity_pairs(features: Tensor, eps: float = 1e-8) -> Tensor:
    """
    Cosine similarity of every pair of rows along axis -2: ``[..., K, D] -> [..., K, K]``.

    Rows with norm below ``eps`` are zeroed, so they contribute 0 to every pair.
    """
    squared = (features * features).sum(axis=-1, keepdims=True)
    alive = Tensor((np.sqrt(squared.data) >= eps).astype(features.dtype))
    unit = features * alive / (squared + eps * eps).sqrt()
    return unit @ unit.swapaxes(-1, -2)
