"""
Dense tensors with reverse-mode differentiation.

A ``Tensor`` wraps a contiguous numpy array. Every differentiable op that
touches a ``requires_grad`` input attaches a ``TapeRecord`` to its output:
the op name, the input tensors, the output id, the activations the backward
rule needs, and the vector-Jacobian product itself. ``backward(root)`` builds
the ``Tape`` reachable from the root (topologically ordered) and walks it once
in reverse.

Records hang off their outputs rather than off a global list, so an abandoned
forward pass is garbage-collected with its tensors and independent graphs on
separate threads never share state. Precision and grad-mode switches are
``contextvars`` for the same reason.
"""

from __future__ import annotations

import contextvars
from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from prism.errors import ContractError, DimensionError
from prism.numcore.flops import record_flops

_DTYPES: dict[int, type[np.floating]] = {32: np.float32, 64: np.float64}

_precision: contextvars.ContextVar[int] = contextvars.ContextVar("prism_precision", default=32)
_grad_enabled: contextvars.ContextVar[bool] = contextvars.ContextVar(
    "prism_grad_enabled", default=True
)

VJP = Callable[[np.ndarray], Sequence[np.ndarray | None]]


def dtype_for(bits: int) -> np.dtype:
    """
    Map a precision in bits (32 or 64) to the numpy float dtype.
    """
    if bits not in _DTYPES:
        raise ContractError(f"precision must be 32 or 64, got {bits}")
    return np.dtype(_DTYPES[bits])


def default_dtype() -> np.dtype:
    """
    The dtype new tensors get when none is given and none can be inferred.
    """
    return dtype_for(_precision.get())


@contextmanager
def precision(bits: int) -> Iterator[None]:
    """
    Temporarily switch the default precision (64 for gradient verification).
    """
    dtype_for(bits)
    token = _precision.set(bits)
    try:
        yield
    finally:
        _precision.reset(token)


@contextmanager
def no_grad() -> Iterator[None]:
    """
    Disable tape recording (inference, evaluation, optimizer updates).
    """
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled() -> bool:
    """
    Whether ops currently record onto the tape.
    """
    return _grad_enabled.get()


@dataclass(eq=False)
class TapeRecord:
    """
    One recorded op: inputs, output identity, saved activations and its VJP.
    """

    op: str
    inputs: tuple[Tensor, ...]
    output_id: int
    vjp: VJP
    saved: tuple[np.ndarray, ...] = field(default_factory=tuple)


class Tape:
    """
    Op records reachable from a root, in topological order.

    Every input of a record appears earlier as the output of another record or
    is a leaf; ``run`` visits each record exactly once in reverse order.
    """

    def __init__(self, records: list[TapeRecord]) -> None:
        self.records = records

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TapeRecord]:
        return iter(self.records)

    @classmethod
    def from_root(cls, root: Tensor) -> Tape:
        """
        Iterative post-order DFS over the record graph hanging off ``root``.
        """
        order: list[TapeRecord] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            tensor, expanded = stack.pop()
            record = tensor._record
            if record is None:
                continue
            if expanded:
                order.append(record)
                continue
            if id(record) in visited:
                continue
            visited.add(id(record))
            stack.append((tensor, True))
            for parent in record.inputs:
                if parent._record is not None and id(parent._record) not in visited:
                    stack.append((parent, False))
        return cls(order)

    def run(self, root: Tensor) -> None:
        """
        Propagate d(root)/d(.) backwards and accumulate into leaf ``.grad``.
        """
        pending: dict[int, np.ndarray] = {id(root): np.ones_like(root.data)}
        for record in reversed(self.records):
            upstream = pending.pop(record.output_id, None)
            if upstream is None:
                continue
            for tensor, grad in zip(record.inputs, record.vjp(upstream), strict=True):
                if grad is None or not tensor.requires_grad:
                    continue
                if tensor._record is None:
                    tensor._accumulate(grad)
                    continue
                key = id(tensor)
                pending[key] = pending[key] + grad if key in pending else grad


def backward(root: Tensor) -> Tape:
    """
    Accumulate d(root)/d(leaf) into every ``requires_grad`` leaf's ``.grad``.

    Repeated calls without ``zero_grad`` add up. Returns the tape that was run.
    """
    if root.size != 1:
        raise ContractError(f"backward needs a scalar root, got shape {root.shape}")
    if not root.requires_grad:
        raise ContractError("backward root does not depend on any requires_grad tensor")
    tape = Tape.from_root(root)
    if root._record is None:
        root._accumulate(np.ones_like(root.data))
    else:
        tape.run(root)
    return tape


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """
    Sum a broadcast gradient back down to ``shape``.
    """
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, size in enumerate(shape) if size == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], op: str, vjp: VJP, saved=()) -> Tensor:
    """
    Wrap an op result, attaching a tape record when any parent needs grads.
    """
    requires = is_grad_enabled() and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=requires)
    if requires:
        out._record = TapeRecord(op, parents, id(out), vjp, tuple(saved))
    return out


class Tensor:
    """
    Dense n-dimensional array participating in reverse-mode differentiation.

    ``data`` is never mutated by ops after creation; only optimizer updates
    (under ``no_grad``) and the ``grad`` accumulator change in place.
    """

    __slots__ = ("data", "requires_grad", "grad", "name", "_record")
    __array_priority__ = 100

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        dtype: np.dtype | type | None = None,
        name: str | None = None,
    ) -> None:
        if isinstance(data, Tensor):
            data = data.data
        if dtype is None:
            is_float = isinstance(data, (np.ndarray, np.generic)) and np.issubdtype(
                data.dtype, np.floating
            )
            dtype = data.dtype if is_float else default_dtype()
        self.data: np.ndarray = np.ascontiguousarray(data, dtype=dtype)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self._record: TapeRecord | None = None

    # -- introspection -------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._record is None

    def item(self) -> float:
        if self.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """
        The underlying array (shared, do not mutate).
        """
        return self.data

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label}, requires_grad={self.requires_grad})"

    def __len__(self) -> int:
        return self.shape[0]

    # -- gradient bookkeeping -----------------------------------------------

    def _accumulate(self, grad: np.ndarray) -> None:
        grad = np.asarray(grad, dtype=self.dtype).reshape(self.shape)
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad = self.grad + grad

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> Tensor:
        return Tensor(self.data, dtype=self.dtype)

    def backward(self) -> Tape:
        return backward(self)

    # -- elementwise arithmetic ---------------------------------------------

    def _lift(self, other) -> Tensor:
        return other if isinstance(other, Tensor) else Tensor(np.asarray(other), dtype=self.dtype)

    def __add__(self, other) -> Tensor:
        other = self._lift(other)
        a_shape, b_shape = self.shape, other.shape
        return _make(
            self.data + other.data,
            (self, other),
            "add",
            lambda g: (_unbroadcast(g, a_shape), _unbroadcast(g, b_shape)),
        )

    __radd__ = __add__

    def __neg__(self) -> Tensor:
        return _make(-self.data, (self,), "neg", lambda g: (-g,))

    def __sub__(self, other) -> Tensor:
        other = self._lift(other)
        a_shape, b_shape = self.shape, other.shape
        return _make(
            self.data - other.data,
            (self, other),
            "sub",
            lambda g: (_unbroadcast(g, a_shape), _unbroadcast(-g, b_shape)),
        )

    def __rsub__(self, other) -> Tensor:
        return self._lift(other) - self

    def __mul__(self, other) -> Tensor:
        other = self._lift(other)
        a, b = self.data, other.data
        return _make(
            a * b,
            (self, other),
            "mul",
            lambda g: (_unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)),
            saved=(a, b),
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> Tensor:
        other = self._lift(other)
        a, b = self.data, other.data
        return _make(
            a / b,
            (self, other),
            "div",
            lambda g: (_unbroadcast(g / b, a.shape), _unbroadcast(-g * a / (b * b), b.shape)),
            saved=(a, b),
        )

    def __rtruediv__(self, other) -> Tensor:
        return self._lift(other) / self

    def __pow__(self, exponent: float) -> Tensor:
        if isinstance(exponent, Tensor):
            raise ContractError("only scalar exponents are supported")
        a = self.data
        p = float(exponent)
        return _make(
            a**p, (self,), "pow", lambda g: (g * p * a ** (p - 1),), saved=(a,)
        )

    def __matmul__(self, other) -> Tensor:
        return matmul(self, self._lift(other))

    def __rmatmul__(self, other) -> Tensor:
        return matmul(self._lift(other), self)

    # -- unary math ----------------------------------------------------------

    def exp(self) -> Tensor:
        out = np.exp(self.data)
        return _make(out, (self,), "exp", lambda g: (g * out,), saved=(out,))

    def log(self) -> Tensor:
        a = self.data
        return _make(np.log(a), (self,), "log", lambda g: (g / a,), saved=(a,))

    def sqrt(self) -> Tensor:
        out = np.sqrt(self.data)
        return _make(out, (self,), "sqrt", lambda g: (g * 0.5 / out,), saved=(out,))

    def abs(self) -> Tensor:
        sign = np.sign(self.data)
        return _make(np.abs(self.data), (self,), "abs", lambda g: (g * sign,), saved=(sign,))

    # -- reductions ----------------------------------------------------------

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        shape = self.shape
        out = self.data.sum(axis=axis, keepdims=keepdims)

        def vjp(g: np.ndarray):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape),)

        return _make(np.asarray(out, dtype=self.dtype), (self,), "sum", vjp)

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        if axis is None:
            count = self.size
        else:
            axes = (axis,) if isinstance(axis, int) else axis
            count = int(np.prod([self.shape[a] for a in axes]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def sort(self, axis: int = -1) -> Tensor:
        """
        Values in ascending order along ``axis``; gradients scatter back to the
        positions the values came from.
        """
        order = np.argsort(self.data, axis=axis, kind="stable")
        shape = self.shape

        def vjp(g: np.ndarray):
            full = np.zeros(shape, dtype=g.dtype)
            np.put_along_axis(full, order, g, axis=axis)
            return (full,)

        return _make(np.take_along_axis(self.data, order, axis=axis), (self,), "sort", vjp, saved=(order,))

    # -- shape plumbing ------------------------------------------------------

    def reshape(self, *shape) -> Tensor:
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        original = self.shape
        return _make(
            self.data.reshape(shape), (self,), "reshape", lambda g: (g.reshape(original),)
        )

    def transpose(self, *axes) -> Tensor:
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        inverse = tuple(np.argsort(axes))
        return _make(
            self.data.transpose(axes), (self,), "transpose", lambda g: (g.transpose(inverse),)
        )

    def swapaxes(self, a: int, b: int) -> Tensor:
        axes = list(range(self.ndim))
        axes[a], axes[b] = axes[b], axes[a]
        return self.transpose(tuple(axes))

    def broadcast_to(self, shape: tuple[int, ...]) -> Tensor:
        original = self.shape
        return _make(
            np.broadcast_to(self.data, shape),
            (self,),
            "broadcast",
            lambda g: (_unbroadcast(g, original),),
        )

    def __getitem__(self, index) -> Tensor:
        if isinstance(index, Tensor):
            raise ContractError("index with numpy arrays, not tensors")
        shape, dtype = self.shape, self.dtype

        def vjp(g: np.ndarray):
            full = np.zeros(shape, dtype=dtype)
            np.add.at(full, index, g)
            return (full,)

        return _make(self.data[index], (self,), "getitem", vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Batched matrix product ``a[..., m, k] @ b[..., k, n]``.

    Batch extents broadcast; the backward rule is dA = dC·Bᵀ, dB = Aᵀ·dC.
    """
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs at least 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner extents differ: {a.shape} @ {b.shape}")
    try:
        batch = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError as exc:
        raise DimensionError(f"matmul batch extents differ: {a.shape} @ {b.shape}") from exc
    m, k, n = a.shape[-2], a.shape[-1], b.shape[-1]
    record_flops(2 * m * k * n * int(np.prod(batch, dtype=np.int64)))
    x, y = a.data, b.data

    def vjp(g: np.ndarray):
        return (
            _unbroadcast(g @ np.swapaxes(y, -1, -2), x.shape),
            _unbroadcast(np.swapaxes(x, -1, -2) @ g, y.shape),
        )

    return _make(x @ y, (a, b), "matmul", vjp, saved=(x, y))


def as_tensor(value, dtype: np.dtype | None = None) -> Tensor:
    """
    Wrap arrays/scalars as constant tensors; pass tensors through unchanged.
    """
    return value if isinstance(value, Tensor) else Tensor(np.asarray(value), dtype=dtype)
