"""Monotone extension of a lattice seed ``phi: Z -> Z`` to ``Phi: Z^2 -> Z``.

On and to the right of the antidiagonal (``m1 >= -m2``) the extension is the
running maximum of ``phi`` over ``[-m2, m1]``; to the left it is the running
minimum over ``[m1, -m2]``.  Both branches give ``phi(m1)`` on the
antidiagonal itself, and the result is non-decreasing in each variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Optional

import numpy as np

__all__ = [
    "SeedFunction",
    "MonotoneExtension",
    "MonotonicityReport",
    "extend_eval",
    "verify_monotone",
]


@dataclass(frozen=True)
class SeedFunction:
    """Integer seed tabulated on ``[lo, lo + len(values) - 1]``.

    Outside the window the nearest endpoint value is used, which keeps the
    seed total.
    """

    values: tuple[int, ...]
    lo: int = 0

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if not vals:
            raise ValueError("seed window must be non-empty")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, f: Callable[[int], int], lo: int, hi: int) -> "SeedFunction":
        if hi < lo:
            raise ValueError("empty window")
        return cls(tuple(f(m) for m in range(lo, hi + 1)), lo)

    @classmethod
    def constant(cls, c: int, lo: int = 0, hi: int = 0) -> "SeedFunction":
        return cls((c,) * (hi - lo + 1), lo)

    @property
    def hi(self) -> int:
        return self.lo + len(self.values) - 1

    def __call__(self, m: int) -> int:
        i = min(max(m - self.lo, 0), len(self.values) - 1)
        return self.values[i]


def _sparse_table(values: np.ndarray, op) -> np.ndarray:
    n = len(values)
    levels = [values]
    span = 1
    while 2 * span <= n:
        prev = levels[-1]
        nxt = prev.copy()
        nxt[: n - span] = op(prev[: n - span], prev[span:])
        levels.append(nxt)
        span *= 2
    return np.stack(levels)


class MonotonicityReport(NamedTuple):
    ok: bool
    # (axis, m1, m2, Phi at (m1, m2), Phi one step further along axis)
    violation: Optional[tuple[int, int, int, int, int]] = None


@dataclass(frozen=True, eq=False)
class MonotoneExtension:
    """The extension ``Phi`` of a :class:`SeedFunction`.

    Range-max and range-min sparse tables over the seed window are built
    eagerly, so every evaluation is O(1) and the object is read-only.
    """

    seed: SeedFunction
    _max: np.ndarray = field(init=False, repr=False)
    _min: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vals = np.asarray(self.seed.values, dtype=np.int64)
        object.__setattr__(self, "_max", _sparse_table(vals, np.maximum))
        object.__setattr__(self, "_min", _sparse_table(vals, np.minimum))

    def _query(self, table, op, a, b):
        """op of the extended seed over [a, b] (arrays, a <= b elementwise)."""
        lo, hi = self.seed.lo, self.seed.hi
        n = hi - lo + 1
        ia = np.clip(a - lo, 0, n - 1)
        ib = np.clip(b - lo, 0, n - 1)
        length = ib - ia + 1
        level = np.zeros_like(length)
        nz = length > 1
        level[nz] = np.floor(np.log2(length[nz])).astype(length.dtype)
        # guard against log2 rounding at exact powers of two
        level = np.where((1 << (level + 1)) <= length, level + 1, level)
        level = np.where((1 << level) > length, level - 1, level)
        return op(table[level, ia], table[level, ib - (1 << level) + 1])

    def evaluate(self, m1, m2) -> np.ndarray:
        """Vectorized ``Phi(m1, m2)`` for integer arrays (broadcast)."""
        m1, m2 = np.broadcast_arrays(np.asarray(m1, dtype=np.int64), np.asarray(m2, dtype=np.int64))
        right = m1 >= -m2
        a = np.where(right, -m2, m1)
        b = np.where(right, m1, -m2)
        hi_part = self._query(self._max, np.maximum, a, b)
        lo_part = self._query(self._min, np.minimum, a, b)
        return np.where(right, hi_part, lo_part)

    def __call__(self, m1: int, m2: int) -> int:
        return extend_eval(self, m1, m2)


def extend_eval(ext: MonotoneExtension, m1: int, m2: int) -> int:
    return int(ext.evaluate(m1, m2))


def verify_monotone(ext: MonotoneExtension, window: int) -> MonotonicityReport:
    """Check both monotonicity steps for every ``(m1, m2)`` in ``[-N, N]^2``."""
    if window < 1:
        raise ValueError("window must be >= 1")
    r = np.arange(-window, window + 2)
    grid = ext.evaluate(r[:, None], r[None, :])
    inner = slice(0, 2 * window + 1)
    steps = (
        (0, grid[1:, inner] - grid[:-1, inner]),
        (1, grid[inner, 1:] - grid[inner, :-1]),
    )
    for axis, diff in steps:
        bad = np.argwhere(diff < 0)
        if len(bad):
            i, j = (int(x) for x in bad[0])
            m1, m2 = int(r[i]), int(r[j])
            after = grid[i + 1, j] if axis == 0 else grid[i, j + 1]
            return MonotonicityReport(False, (axis, m1, m2, int(grid[i, j]), int(after)))
    return MonotonicityReport(True)


def antidiagonal_mismatches(ext: MonotoneExtension, ms: Iterable[int]) -> list[int]:
    """Indices ``m`` where ``Phi(m, -m) != phi(m)``."""
    ms = np.fromiter(ms, dtype=np.int64)
    got = ext.evaluate(ms, -ms)
    want = np.array([ext.seed(int(m)) for m in ms], dtype=np.int64)
    return [int(m) for m in ms[got != want]]
