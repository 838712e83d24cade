"""
Adam with global gradient-norm clipping.
"""

from __future__ import annotations

import math
from collections.abc import Mapping

import numpy as np

from prism.errors import ContractError
from prism.numcore import Tensor


class Adam:
    """
    Adam over a named parameter dict, updating ``Tensor.data`` in place of the
    old array. Moments share the parameter dtype.
    """

    def __init__(
        self,
        params: Mapping[str, Tensor],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        grad_clip: float | None = None,
    ) -> None:
        if lr < 0:
            raise ContractError(f"learning rate must be >= 0, got {lr}")
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.grad_clip = grad_clip
        self.t = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def grad_norm(self) -> float:
        squared = sum(float(np.sum(np.square(p.grad, dtype=np.float64))) for p in self._with_grad())
        return math.sqrt(squared)

    def _with_grad(self):
        return (p for p in self.params.values() if p.grad is not None)

    def clip(self) -> float:
        """
        Rescale all gradients so their global L2 norm is at most ``grad_clip``.

        Returns the norm before clipping.
        """
        norm = self.grad_norm()
        if self.grad_clip is not None and norm > self.grad_clip:
            scale = self.grad_clip / (norm + 1e-6)
            for p in self._with_grad():
                p.grad = p.grad * p.dtype.type(scale)
        return norm

    def step(self, lr: float | None = None) -> float:
        """
        Clip, then apply one bias-corrected Adam update. Parameters without a
        gradient are left untouched. Returns the pre-clip gradient norm.
        """
        rate = self.lr if lr is None else lr
        norm = self.clip()
        self.t += 1
        correction1 = 1.0 - self.beta1**self.t
        correction2 = 1.0 - self.beta2**self.t
        for name, p in self.params.items():
            if p.grad is None:
                continue
            g = p.grad
            dtype = p.dtype.type
            self.m[name] = dtype(self.beta1) * self.m[name] + dtype(1.0 - self.beta1) * g
            self.v[name] = dtype(self.beta2) * self.v[name] + dtype(1.0 - self.beta2) * g * g
            m_hat = self.m[name] / dtype(correction1)
            v_hat = self.v[name] / dtype(correction2)
            p.data = p.data - dtype(rate) * (m_hat / (np.sqrt(v_hat) + dtype(self.eps)))
        return norm

    def state_arrays(self) -> dict[str, np.ndarray]:
        arrays = {f"m/{name}": values.copy() for name, values in self.m.items()}
        arrays.update({f"v/{name}": values.copy() for name, values in self.v.items()})
        return arrays

    def load_state_arrays(self, arrays: Mapping[str, np.ndarray], t: int) -> None:
        for name, p in self.params.items():
            self.m[name] = np.asarray(arrays[f"m/{name}"], dtype=p.dtype).copy()
            self.v[name] = np.asarray(arrays[f"v/{name}"], dtype=p.dtype).copy()
        self.t = t
