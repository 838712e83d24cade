"""
Forward FLOP accounting.

Ops report their multiply-add work through ``record_flops``; it is a no-op
unless a ``FlopCounter`` is active in the current context. Matmul counts
``2·m·k·n`` per batch element, real FFTs ``2.5·T·log2(T)`` per transformed
vector (half of a complex radix-2 transform).
"""

from __future__ import annotations

import contextvars
import math
from collections import defaultdict
from collections.abc import Iterator
from contextlib import contextmanager

_active: contextvars.ContextVar[FlopCounter | None] = contextvars.ContextVar(
    "prism_flop_counter", default=None
)


class FlopCounter:
    """
    Accumulates FLOPs reported by ops, bucketed by op kind.
    """

    def __init__(self) -> None:
        self.by_op: dict[str, int] = defaultdict(int)

    @property
    def total(self) -> int:
        return sum(self.by_op.values())

    def add(self, flops: int, op: str) -> None:
        self.by_op[op] += int(flops)


def record_flops(flops: int, op: str = "matmul") -> None:
    counter = _active.get()
    if counter is not None:
        counter.add(flops, op)


def fft_flops(length: int, vectors: int) -> int:
    """
    Nominal cost of ``vectors`` real transforms of ``length`` points.
    """
    if length < 2:
        return 0
    return int(2.5 * length * math.log2(length) * vectors)


@contextmanager
def count_flops() -> Iterator[FlopCounter]:
    """
    Count FLOPs of every op executed inside the block.

        with count_flops() as counter:
            model.forward(X, stamps)
        print(counter.total)
    """
    counter = FlopCounter()
    token = _active.set(counter)
    try:
        yield counter
    finally:
        _active.reset(token)
