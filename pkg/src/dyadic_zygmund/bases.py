"""Shape functions and interval families for the two dyadic constructions.

* ``theorem1_basis``: seeds ``phi_i = psi_i`` for a bijection ``psi: Z -> Z^d``,
  extended by :class:`MonotoneExtension`, so the antidiagonal of the
  parameter plane sweeps every integer shape.
* ``theorem2_family``: the finite subfamily of ``E'`` that is tested against
  ``f_k``; boxes ``[0, 2**a) x [0, 2**-a) x Rbar`` with ``a = tau^{-1}(n)``
  and ``beta_n`` equal to the exponents of ``Rbar``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np

from .dyadic import (
    AnchoredBox,
    Exponent,
    ExponentVec,
    RootExponent,
    compare_exponents,
    normalize_exponent,
)
from .extension import MonotoneExtension, MonotonicityReport, SeedFunction, verify_monotone

__all__ = [
    "LatticeBijection",
    "BetaSequence",
    "ZygmundBasis",
    "CoverageReport",
    "IndexMatch",
    "IndexNotFoundError",
    "BetaBasis",
    "fold",
    "unfold",
    "bijection_eval",
    "theorem1_basis",
    "lift_extension",
    "beta_shell",
    "beta_concat",
    "beta_index_find",
    "tau",
    "tau_inverse",
    "tau_map",
    "basis_A_interval",
    "is_E_prime",
    "theorem2_pairs",
    "theorem2_family",
    "select_cd",
]


def fold(m: int) -> int:
    """Zigzag ``Z -> N``: 0, 1, -1, 2, -2, ... map to 0, 1, 2, 3, 4, ..."""
    return 2 * m - 1 if m > 0 else -2 * m


def unfold(t: int) -> int:
    if t < 0:
        raise ValueError("natural index must be >= 0")
    return (t + 1) // 2 if t % 2 else -(t // 2)


class LatticeBijection:
    """``psi: Z -> Z^d``.

    Integers are folded onto N by the zigzag, and N enumerates ``Z^d`` shell
    by shell in the max-norm, lexicographically inside each shell.
    """

    def __init__(self, d: int):
        if d < 1:
            raise ValueError("d must be >= 1")
        self.d = d

    def __repr__(self) -> str:
        return f"LatticeBijection(d={self.d})"

    def _shell_start(self, s: int) -> int:
        return 0 if s == 0 else (2 * s - 1) ** self.d

    def _completions(self, s: int, rem: int, hit: bool) -> int:
        # points of the shell extending a prefix; `hit` = prefix already has |x| = s
        if hit:
            return (2 * s + 1) ** rem
        return (2 * s + 1) ** rem - (2 * s - 1) ** rem

    def unrank(self, t: int) -> tuple[int, ...]:
        s = 0
        while self._shell_start(s + 1) <= t:
            s += 1
        p = t - self._shell_start(s)
        point: list[int] = []
        hit = s == 0
        for i in range(self.d):
            rem = self.d - i - 1
            for v in range(-s, s + 1):
                h = hit or abs(v) == s
                c = self._completions(s, rem, h)
                if p < c:
                    point.append(v)
                    hit = h
                    break
                p -= c
        return tuple(point)

    def rank(self, point: Sequence[int]) -> int:
        if len(point) != self.d:
            raise ValueError("dimension mismatch")
        s = max((abs(x) for x in point), default=0)
        t = self._shell_start(s)
        hit = s == 0
        for i, x in enumerate(point):
            rem = self.d - i - 1
            for v in range(-s, x):
                t += self._completions(s, rem, hit or abs(v) == s)
            hit = hit or abs(x) == s
        return t

    def __call__(self, m: int) -> tuple[int, ...]:
        return self.unrank(fold(m))

    def index(self, point: Sequence[int]) -> int:
        return unfold(self.rank(point))


def bijection_eval(b: LatticeBijection, m: int) -> tuple[int, ...]:
    return b(m)


@dataclass(frozen=True)
class ZygmundBasis:
    """``d`` monotone shape functions of ``arity`` integer parameters.

    Only the first two parameters are used; the rest are the trivial lift.
    """

    d: int
    arity: int
    extensions: tuple[MonotoneExtension, ...]

    def shape(self, m: Sequence[int]) -> ExponentVec:
        if len(m) != self.arity:
            raise ValueError(f"expected {self.arity} parameters, got {len(m)}")
        return ExponentVec(ext(m[0], m[1]) for ext in self.extensions)

    def box(self, m: Sequence[int]) -> AnchoredBox:
        return self.shape(m).to_box()


def lift_extension(basis: ZygmundBasis, k: int) -> ZygmundBasis:
    if k < 2:
        raise ValueError("arity must be >= 2")
    return ZygmundBasis(basis.d, k, basis.extensions)


@dataclass(frozen=True)
class CoverageReport:
    d: int
    window: int
    index_range: tuple[int, int]
    n_targets: int
    missing: tuple[tuple[int, ...], ...]
    monotone: tuple[MonotonicityReport, ...]

    @property
    def ok(self) -> bool:
        return not self.missing and all(r.ok for r in self.monotone)


def theorem1_basis(d: int, N: int, check_monotone: bool = True) -> tuple[ZygmundBasis, CoverageReport]:
    """Build the all-shapes basis and confirm ``[-N, N]^d`` is swept.

    The seeds are tabulated on the index window holding the first
    ``(2N+1)^d`` points of the bijection, which is exactly the cube.
    """
    if d < 2 or N < 1:
        raise ValueError("need d >= 2 and N >= 1")
    psi = LatticeBijection(d)
    count = (2 * N + 1) ** d
    half = (count - 1) // 2  # count is odd, so the folded window is symmetric
    lo, hi = -half, half
    points = [psi(m) for m in range(lo, hi + 1)]
    exts = tuple(
        MonotoneExtension(SeedFunction(tuple(p[i] for p in points), lo)) for i in range(d)
    )
    basis = ZygmundBasis(d, 2, exts)

    ms = np.arange(lo, hi + 1)
    cols = np.stack([e.evaluate(ms, -ms) for e in exts], axis=1)
    attained = {tuple(int(x) for x in row) for row in cols}
    targets = itertools.product(range(-N, N + 1), repeat=d)
    missing = tuple(t for t in targets if t not in attained)
    window = max(abs(lo), abs(hi))
    monotone = tuple(verify_monotone(e, window) for e in exts) if check_monotone else ()
    return basis, CoverageReport(d, N, (lo, hi), count, missing, monotone)


class BetaSequence:
    """Zero-sum ``(d-2)``-tuples, shell by shell.

    Shell ``n`` lists the tuples whose first ``d-3`` coordinates lie in
    ``[0, n]`` (lexicographic order on those coordinates); the last coordinate
    is minus the sum of the others.  Shell ``n`` has ``(n+1)**(d-3)`` entries.
    """

    def __init__(self, d: int):
        if d < 4:
            raise ValueError("the beta sequence needs d >= 4")
        self.d = d
        self.free = d - 3
        self._starts = [0]

    def shell_size(self, n: int) -> int:
        return (n + 1) ** self.free

    def shell_start(self, n: int) -> int:
        """Concatenated index of the first entry of shell ``n``."""
        st = self._starts
        while len(st) <= n:
            st.append(st[-1] + self.shell_size(len(st) - 1))
        return st[n]

    def shell(self, n: int) -> list[tuple[int, ...]]:
        if n < 0:
            raise ValueError("shell index must be >= 0")
        return [t + (-sum(t),) for t in itertools.product(range(n + 1), repeat=self.free)]

    def position(self, n: int, tup: Sequence[int]) -> int:
        p = 0
        for x in tup[: self.free]:
            p = p * (n + 1) + x
        return p

    def __getitem__(self, m: int) -> tuple[int, ...]:
        if m < 0:
            raise IndexError("beta index must be >= 0")
        lo, hi = 0, 1
        while self.shell_start(hi) <= m:
            hi *= 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.shell_start(mid) <= m:
                lo = mid
            else:
                hi = mid
        p = m - self.shell_start(lo)
        digits = []
        for _ in range(self.free):
            p, r = divmod(p, lo + 1)
            digits.append(r)
        free = tuple(reversed(digits))
        return free + (-sum(free),)

    def check_tuple(self, tup: Sequence[int]) -> None:
        if len(tup) != self.d - 2 or sum(tup) != 0 or any(x < 0 for x in tup[: self.free]):
            raise ValueError(f"{tuple(tup)} is not a beta tuple for d={self.d}")

    def occurrence(self, tup: Sequence[int], n: int) -> int:
        """Concatenated index of ``tup`` inside shell ``n`` (needs n >= max free coord)."""
        return self.shell_start(n) + self.position(n, tup)

    def first_index_at_least(self, tup: Sequence[int], lower: int) -> int:
        """Smallest concatenated index ``>= lower`` carrying ``tup``."""
        self.check_tuple(tup)
        lo = max(tup[: self.free], default=0)
        if self.occurrence(tup, lo) >= lower:
            return self.occurrence(tup, lo)
        hi = max(lo, 1)
        while self.occurrence(tup, hi) < lower:
            hi *= 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.occurrence(tup, mid) >= lower:
                hi = mid
            else:
                lo = mid
        return self.occurrence(tup, hi)


_BETA: dict[int, BetaSequence] = {}


def _beta(d: int) -> BetaSequence:
    if d not in _BETA:
        _BETA[d] = BetaSequence(d)
    return _BETA[d]


def beta_shell(d: int, n: int) -> list[tuple[int, ...]]:
    return _beta(d).shell(n)


def beta_concat(d: int, m: int) -> tuple[int, ...]:
    return _beta(d)[m]


class IndexNotFoundError(LookupError):
    """No concatenated index of the tuple lies inside the admissible bounds."""


class IndexMatch(NamedTuple):
    n: int
    lower: int
    upper: int
    admissible: tuple[int, ...]


def _index_bounds(d: int, j: int, cd) -> tuple[int, int]:
    lower = math.ceil(Fraction((j - 1) ** (d - 2)) / Fraction(cd))
    return lower, j ** (d - 2)


def beta_index_find(d: int, tup: Sequence[int], j: int, cd, list_all: bool = True) -> IndexMatch:
    """Smallest ``n`` with ``beta_n = tup`` and ``(j-1)^{d-2}/C <= n <= j^{d-2}``."""
    if Fraction(cd) <= 1:
        raise ValueError("C_d must be > 1")
    seq = _beta(d)
    tup = tuple(tup)
    lower, upper = _index_bounds(d, j, cd)
    n = seq.first_index_at_least(tup, lower)
    if n > upper:
        raise IndexNotFoundError(f"beta tuple {tup} has no index in [{lower}, {upper}] (j={j}, C_d={cd})")
    found = [n]
    if list_all:
        s = max(tup[: seq.free], default=0)
        while seq.occurrence(tup, s) < n:
            s += 1
        s += 1
        while (nxt := seq.occurrence(tup, s)) <= upper:
            found.append(nxt)
            s += 1
    return IndexMatch(n, lower, upper, tuple(found))


def tau(d: int, s: Exponent) -> Exponent:
    """``s**(d-2) * sign(s)``."""
    if isinstance(s, RootExponent):
        q, r = s.q, s.r
    else:
        q, r = int(s), 1
    sign = (q > 0) - (q < 0)
    return normalize_exponent(RootExponent(sign * abs(q) ** (d - 2), r))


def tau_inverse(d: int, n: int) -> Exponent:
    return normalize_exponent(RootExponent(int(n), d - 2))


def tau_map(d: int, direction: str, value):
    if direction == "forward":
        return tau(d, value)
    if direction == "inverse":
        return tau_inverse(d, value)
    raise ValueError("direction must be 'forward' or 'inverse'")


class BetaBasis:
    """The shape functions ``Phi_i`` of the second construction.

    Seeds are ``phi_i(m) = beta_m[i]`` for ``m >= 0`` and ``0`` for ``m < 0``,
    tabulated on ``[-window, window]``.
    """

    def __init__(self, d: int, window: int):
        if d < 4:
            raise ValueError("d must be >= 4")
        self.d = d
        self.window = window
        seq = _beta(d)
        rows = [(0,) * (d - 2)] * window + [seq[m] for m in range(window + 1)]
        self.extensions = tuple(
            MonotoneExtension(SeedFunction(tuple(r[i] for r in rows), -window)) for i in range(d - 2)
        )

    def exponents(self, s: Exponent, t: Exponent) -> tuple[Exponent, ...]:
        ts, tt = tau(self.d, s), tau(self.d, t)
        if not (isinstance(ts, int) and isinstance(tt, int)):
            raise ValueError("s and t must lie in tau^{-1}(Z)")
        if max(abs(ts), abs(tt)) > self.window:
            raise ValueError(f"tau values ({ts}, {tt}) exceed the tabulated window {self.window}")
        return (normalize_exponent(s), normalize_exponent(t)) + tuple(e(ts, tt) for e in self.extensions)


def basis_A_interval(d: int, s: Exponent, t: Exponent, basis: Optional[BetaBasis] = None) -> tuple[Exponent, ...]:
    if basis is None:
        w = max(abs(int(tau(d, s))), abs(int(tau(d, t))), 1)
        basis = BetaBasis(d, w)
    return basis.exponents(s, t)


def is_E_prime(shape: Sequence[Exponent]) -> bool:
    """First two exponents are exact negatives (``|pi_1 R| |pi_2 R| = 1``)."""
    return compare_exponents(shape[0], -shape[1]) == 0


def _tuples_for_scale(d: int, j: int, cd) -> Iterable[tuple[int, ...]]:
    top = math.floor(Fraction(j) / Fraction(cd))
    for free in itertools.product(range(top + 1), repeat=d - 3):
        yield free + (-sum(free),)


def theorem2_pairs(d: int, k: int, cd) -> list[tuple[int, tuple[int, ...]]]:
    """Sorted, de-duplicated ``(n, Rbar exponents)`` pairs of the test family."""
    if d < 4 or k < 1:
        raise ValueError("need d >= 4 and k >= 1")
    out = set()
    for j in range(1, k + 1):
        for tup in _tuples_for_scale(d, j, cd):
            out.add((beta_index_find(d, tup, j, cd, list_all=False).n, tup))
    return sorted(out)


def theorem2_family(d: int, k: int, cd) -> list[AnchoredBox]:
    """Boxes ``(tau^{-1}(n), -tau^{-1}(n), m_1, ..., m_{d-2})`` for scales ``j <= k``."""
    boxes = []
    for n, tup in theorem2_pairs(d, k, cd):
        a = tau_inverse(d, n)
        boxes.append(AnchoredBox((a, -a) + tup))
    return boxes


def select_cd(d: int, k: int, start: Optional[int] = None, limit: int = 10_000) -> int:
    """Smallest integer ``C_d >= max(d-3, 2)`` for which every index lookup up to scale ``k`` succeeds."""
    c = max(d - 3, 2) if start is None else start
    while c <= limit:
        try:
            for j in range(1, k + 1):
                for tup in _tuples_for_scale(d, j, c):
                    beta_index_find(d, tup, j, c, list_all=False)
        except IndexNotFoundError:
            c += 1
            continue
        return c
    raise IndexNotFoundError(f"no C_d <= {limit} works for d={d}, k={k}")
