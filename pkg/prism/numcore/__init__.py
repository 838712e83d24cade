"""
Dense-tensor arithmetic, reverse-mode differentiation and real FFT primitives.
"""

from prism.numcore.flops import FlopCounter, count_flops
from prism.numcore.ops import (
    concat,
    cosine_similarity_pairs,
    dropout,
    gelu,
    layer_norm,
    mae,
    mse,
    sigmoid,
    softmax,
    stack,
)
from prism.numcore.spectral import ComplexTensor, band_masks, bin_count, irfft, rfft
from prism.numcore.tensor import (
    Tape,
    TapeRecord,
    Tensor,
    as_tensor,
    backward,
    default_dtype,
    dtype_for,
    is_grad_enabled,
    matmul,
    no_grad,
    precision,
)

__all__ = [
    "ComplexTensor",
    "FlopCounter",
    "Tape",
    "TapeRecord",
    "Tensor",
    "as_tensor",
    "backward",
    "band_masks",
    "bin_count",
    "concat",
    "cosine_similarity_pairs",
    "count_flops",
    "default_dtype",
    "dropout",
    "dtype_for",
    "gelu",
    "irfft",
    "is_grad_enabled",
    "layer_norm",
    "mae",
    "matmul",
    "mse",
    "no_grad",
    "precision",
    "rfft",
    "sigmoid",
    "softmax",
    "stack",
]
