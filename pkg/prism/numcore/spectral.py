"""
Real FFT primitives and complex arithmetic over pairs of real tensors.

Complex values are held as a ``ComplexTensor`` of two real ``Tensor`` leaves
(``re``, ``im``) so the tape stays purely real. ``rfft`` / ``irfft`` use
``scipy.fft`` for the forward transform and register the adjoint transform as
their backward rule:

* rfft, ``X_k = Σ_t x_t e^{-2πikt/T}`` for ``k < F``: the cotangent of ``x`` is
  ``Re(T · ifft(G zero-padded to T))`` where ``G = dRe + i·dIm``.
* irfft (Hermitian completion): bin ``k`` enters ``x`` with weight ``w_k/T``
  where ``w_k = 1`` for DC and the even-length Nyquist bin and 2 otherwise, so
  the cotangent of the spectrum is ``rfft(g) · w / T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

from prism.errors import DimensionError
from prism.numcore.flops import fft_flops, record_flops
from prism.numcore.tensor import Tensor, _make


def bin_count(length: int) -> int:
    """
    Number of rFFT bins for a real signal of ``length`` samples.
    """
    return length // 2 + 1


@dataclass(frozen=True, eq=False)
class ComplexTensor:
    """
    A complex array stored as real and imaginary ``Tensor`` parts.
    """

    re: Tensor
    im: Tensor

    def __post_init__(self) -> None:
        if self.re.shape != self.im.shape:
            raise DimensionError(f"re {self.re.shape} and im {self.im.shape} differ")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.re.shape

    def numpy(self) -> np.ndarray:
        return self.re.data + 1j * self.im.data

    def __mul__(self, other: ComplexTensor | Tensor) -> ComplexTensor:
        """
        Complex product; a real ``Tensor`` operand scales both parts.
        """
        if isinstance(other, ComplexTensor):
            return ComplexTensor(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        return ComplexTensor(self.re * other, self.im * other)

    def __add__(self, other: ComplexTensor) -> ComplexTensor:
        return ComplexTensor(self.re + other.re, self.im + other.im)

    def energy(self) -> np.ndarray:
        """
        Squared magnitude per bin (no gradient).
        """
        return self.re.data**2 + self.im.data**2


def _move_last(shape: tuple[int, ...], axis: int, extent: int) -> tuple[int, ...]:
    out = [1] * len(shape)
    out[axis] = extent
    return tuple(out)


def rfft(x: Tensor, axis: int = -1) -> ComplexTensor:
    """
    Real-input FFT along ``axis``; ``T`` samples give ``floor(T/2)+1`` bins.
    """
    axis = axis % x.ndim
    length = x.shape[axis]
    if length < 2:
        raise DimensionError(f"rfft needs at least 2 samples along axis {axis}, got {length}")
    spectrum = sp_fft.rfft(x.data, axis=axis)
    record_flops(fft_flops(length, x.size // length), op="fft")
    dtype = x.dtype

    def adjoint(cotangent: np.ndarray) -> np.ndarray:
        return (sp_fft.ifft(cotangent, n=length, axis=axis) * length).real.astype(dtype)

    re = _make(spectrum.real.astype(dtype), (x,), "rfft.re", lambda g: (adjoint(g + 0j),))
    im = _make(spectrum.imag.astype(dtype), (x,), "rfft.im", lambda g: (adjoint(1j * g),))
    return ComplexTensor(re, im)


def irfft(spectrum: ComplexTensor, length: int, axis: int = -1) -> Tensor:
    """
    Inverse of ``rfft``; ``length`` resolves the parity of the original signal.
    """
    re, im = spectrum.re, spectrum.im
    axis = axis % re.ndim
    bins = re.shape[axis]
    if length < 2 or bins != bin_count(length):
        raise DimensionError(
            f"irfft got {bins} bins along axis {axis}, expected {bin_count(max(length, 0))} "
            f"for length {length}"
        )
    out = sp_fft.irfft(re.data + 1j * im.data, n=length, axis=axis).astype(re.dtype)
    record_flops(fft_flops(length, re.size // bins), op="fft")
    weights = np.full(bins, 2.0)
    weights[0] = 1.0
    if length % 2 == 0:
        weights[-1] = 1.0
    weights = (weights / length).reshape(_move_last(re.shape, axis, bins))

    def vjp(g: np.ndarray):
        cotangent = sp_fft.rfft(g, axis=axis) * weights
        return cotangent.real.astype(re.dtype), cotangent.imag.astype(re.dtype)

    return _make(out, (re, im), "irfft", vjp)


def band_masks(bins: int, cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Complementary 0/1 masks: low keeps ``[0, cutoff)``, high keeps ``[cutoff, bins)``.
    """
    if not 1 <= cutoff < bins:
        raise DimensionError(f"cutoff {cutoff} must lie in [1, {bins})")
    low = np.zeros(bins)
    low[:cutoff] = 1.0
    return low, 1.0 - low
