"""
Central finite-difference gradient verification.

Used by the test-suite at 64-bit precision: every analytic gradient produced by
``backward`` is compared elementwise against ``(f(θ+h) − f(θ−h)) / 2h``.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping

import numpy as np

from prism.numcore.tensor import Tensor, backward, no_grad


def numerical_gradient(loss_fn: Callable[[], Tensor], leaf: Tensor, step: float = 1e-5) -> np.ndarray:
    """
    Central differences of ``loss_fn()`` with respect to every element of ``leaf``.

    ``leaf.data`` is perturbed in place and restored afterwards.
    """
    grad = np.zeros(leaf.shape, dtype=np.float64)
    flat = leaf.data.reshape(-1)
    out = grad.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            upper = float(loss_fn().data)
            flat[i] = original - step
            lower = float(loss_fn().data)
            flat[i] = original
            out[i] = (upper - lower) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    """
    Elementwise ``|a − fd| / max(|a|, |fd|, floor)``.
    """
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def check_gradients(
    loss_fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    step: float = 1e-5,
    atol: float = 0.0,
) -> dict[str, float]:
    """
    Worst relative error per parameter between analytic and numerical gradients.

    Entries whose absolute disagreement is at most ``atol`` count as exact
    matches; this absorbs finite-difference noise on gradients that are zero
    analytically (e.g. the imaginary filter weight of the DC bin).
    """
    for tensor in params.values():
        tensor.zero_grad()
    backward(loss_fn())
    worst: dict[str, float] = {}
    for name, tensor in params.items():
        analytic = np.zeros(tensor.shape) if tensor.grad is None else tensor.grad.astype(np.float64)
        numeric = numerical_gradient(loss_fn, tensor, step)
        errors = relative_error(analytic, numeric)
        errors[np.abs(analytic - numeric) <= atol] = 0.0
        worst[name] = float(errors.max()) if errors.size else 0.0
    return worst
