"""
Named parameter set of a PRISM network.

Parameters live in one insertion-ordered ``dict[str, Tensor]``; the order is
the checkpoint blob order. Names are dotted paths:

    embed.W_p            [P, D]
    embed.W_t, embed.b_t [4, D], [D]
    layers.{l}.mha.*     W_q W_k W_v W_o, ln.gain ln.bias
    layers.{l}.pdd.*     Q_p [K, D], W_K W_V W_O, ln.*          (use_primitive)
    layers.{l}.spectral.* W_freq_re W_freq_im [F, D], W_low W_high,
                         W_g [2D, D], b_g, ln.*                 (use_spectral)
    layers.{l}.ffn.*     W_1 [D, 4D] b_1 W_2 [4D, D] b_2, ln.*
    head.*               W_1 [D, D] b_1 W_2 [D, H] b_2
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from prism.model.config import PrismConfig
from prism.numcore import Tensor

PRIMITIVE_QUERY_STD = 0.02


@dataclass(frozen=True)
class Scope:
    """
    A view of the parameters under one dotted prefix.
    """

    params: Mapping[str, Tensor]
    prefix: str

    def __getitem__(self, name: str) -> Tensor:
        return self.params[f"{self.prefix}.{name}"]

    def child(self, name: str) -> Scope:
        return Scope(self.params, f"{self.prefix}.{name}")


class _Builder:
    def __init__(self, rng: np.random.Generator, dtype: np.dtype) -> None:
        self.rng = rng
        self.dtype = dtype
        self.params: dict[str, Tensor] = {}

    def _add(self, name: str, values: np.ndarray) -> None:
        self.params[name] = Tensor(values.astype(self.dtype), requires_grad=True, name=name)

    def xavier(self, name: str, fan_in: int, fan_out: int) -> None:
        std = np.sqrt(2.0 / (fan_in + fan_out))
        self._add(name, self.rng.normal(0.0, std, size=(fan_in, fan_out)))

    def normal(self, name: str, shape: tuple[int, ...], std: float) -> None:
        self._add(name, self.rng.normal(0.0, std, size=shape))

    def constant(self, name: str, shape: tuple[int, ...], value: float) -> None:
        self._add(name, np.full(shape, value))

    def layer_norm(self, prefix: str, width: int) -> None:
        self.constant(f"{prefix}.ln.gain", (width,), 1.0)
        self.constant(f"{prefix}.ln.bias", (width,), 0.0)


def init_parameters(
    config: PrismConfig, rng: np.random.Generator, dtype: np.dtype
) -> dict[str, Tensor]:
    """
    Fresh parameters for ``config``: Xavier-normal matrices, zero biases,
    unit layer-norm gains, identity frequency filter, Gaussian(0, 0.02) dictionary.
    """
    d, k, h = config.d_model, config.n_primitives, config.horizon
    b = _Builder(rng, dtype)
    b.xavier("embed.W_p", config.patch, d)
    b.xavier("embed.W_t", 4, d)
    b.constant("embed.b_t", (d,), 0.0)

    for layer in range(config.n_layers):
        root = f"layers.{layer}"
        for name in ("W_q", "W_k", "W_v", "W_o"):
            b.xavier(f"{root}.mha.{name}", d, d)
        b.layer_norm(f"{root}.mha", d)

        if config.use_primitive:
            # A symmetric dictionary keeps α uniform forever.
            b.normal(f"{root}.pdd.Q_p", (k, d), PRIMITIVE_QUERY_STD)
            for name in ("W_K", "W_V", "W_O"):
                b.xavier(f"{root}.pdd.{name}", d, d)
            b.layer_norm(f"{root}.pdd", d)

        if config.use_spectral:
            bins = config.n_bins
            b.constant(f"{root}.spectral.W_freq_re", (bins, d), 1.0)
            b.constant(f"{root}.spectral.W_freq_im", (bins, d), 0.0)
            b.xavier(f"{root}.spectral.W_low", d, d)
            b.xavier(f"{root}.spectral.W_high", d, d)
            b.xavier(f"{root}.spectral.W_g", 2 * d, d)
            b.constant(f"{root}.spectral.b_g", (d,), 0.0)
            b.layer_norm(f"{root}.spectral", d)

        b.xavier(f"{root}.ffn.W_1", d, 4 * d)
        b.constant(f"{root}.ffn.b_1", (4 * d,), 0.0)
        b.xavier(f"{root}.ffn.W_2", 4 * d, d)
        b.constant(f"{root}.ffn.b_2", (d,), 0.0)
        b.layer_norm(f"{root}.ffn", d)

    b.xavier("head.W_1", d, d)
    b.constant("head.b_1", (d,), 0.0)
    b.xavier("head.W_2", d, h)
    b.constant("head.b_2", (h,), 0.0)
    return b.params


def parameter_shapes(config: PrismConfig) -> dict[str, tuple[int, ...]]:
    """
    Name → shape for ``config``, in blob order.
    """
    params = init_parameters(config, np.random.default_rng(0), np.dtype(np.float32))
    return {name: tensor.shape for name, tensor in params.items()}


def parameter_count(config: PrismConfig) -> int:
    return sum(int(np.prod(shape)) for shape in parameter_shapes(config).values())

