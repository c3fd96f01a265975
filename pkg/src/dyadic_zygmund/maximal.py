"""Test functions, box averages and the restricted maximal operator.

``f_k`` is ``2**(d*k)`` on the cube ``[0, 2**-k)**d`` and zero elsewhere, so
its integral is exactly 1 and its average over an anchored box has the closed
form ``2**(d*k + sum(min(e_i, -k) - e_i))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Sequence, Union

import gmpy2
from gmpy2 import mpfr

from . import _interval
from ._interval import Enclosure, to_fraction
from .dyadic import (
    AnchoredBox,
    DyadicRational,
    Exponent,
    ExponentSum,
    compare_exponents,
    cube,
    intersect_anchored,
    pow2_enclosure,
)
from .measure import UnionMeasureResult, union_volume

__all__ = [
    "TestFunction",
    "WeakTypeConfig",
    "average_over_box",
    "maximal_eval",
    "superlevel_lower_bound",
    "orlicz_rhs",
]

Value = Union[DyadicRational, Enclosure]

_MAX_BITS = 1 << 14


@dataclass(frozen=True)
class TestFunction:
    """``f_k = 2**(d*k)`` on ``[0, 2**-k)**d``."""

    __test__ = False  # not a pytest class

    k: int
    d: int

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.d < 1:
            raise ValueError("d must be >= 1")

    @property
    def support(self) -> AnchoredBox:
        return cube(self.d, -self.k)

    @property
    def height(self) -> DyadicRational:
        return DyadicRational.pow2(self.d * self.k)

    def integral(self) -> DyadicRational:
        return self.height * DyadicRational.pow2(-self.d * self.k)

    def __call__(self, x: Sequence) -> DyadicRational:
        if len(x) != self.d:
            raise ValueError(f"expected a point in R^{self.d}")
        lim = Fraction(1, 1 << self.k)
        inside = all(0 <= to_fraction(_frac(c)) < lim for c in x)
        return self.height if inside else DyadicRational(0)


@dataclass(frozen=True)
class WeakTypeConfig:
    alpha: Real
    level: Real = 1

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.level <= 0:
            raise ValueError("level must be > 0")


def _frac(x) -> Fraction:
    if isinstance(x, DyadicRational):
        return x.to_fraction()
    return to_fraction(x) if not isinstance(x, float) else Fraction(x)


def _average_exponent(box: AnchoredBox, f: TestFunction) -> ExponentSum:
    s = ExponentSum(intersect_anchored(box, f.support).exps)
    s.integer += f.d * f.k
    for e in box.exps:
        s.add(e, -1)
    return s


def average_over_box(box: AnchoredBox, f: TestFunction, precision: int = 128) -> Value:
    """``(1/|R|) * integral of f_k over R``; exact whenever it is rational."""
    if box.d != f.d:
        raise ValueError(f"dimension mismatch: box {box.d}, function {f.d}")
    s = _average_exponent(box, f)
    if s.is_integer():
        return DyadicRational.pow2(s.integer)
    lo, hi = s.enclosure(precision + _interval.GUARD_BITS)
    return Enclosure(*_interval.exp2_enclosure(lo, hi, precision + _interval.GUARD_BITS))


def _at_least(box: AnchoredBox, f: TestFunction, level: Fraction) -> bool:
    bits = 64
    while True:
        v = average_over_box(box, f, bits)
        if isinstance(v, DyadicRational):
            return v.to_fraction() >= level
        # an irrational power of two is never rational, so this terminates
        if to_fraction(v.lower) >= level:
            return True
        if to_fraction(v.upper) < level:
            return False
        bits *= 2
        if bits > _MAX_BITS:
            raise ArithmeticError("could not separate the average from the level")


def _below_pow2(x: Fraction, e: Exponent) -> bool:
    """Exact test of ``x < 2**e`` for rational ``x >= 0``."""
    if x == 0:
        return True
    num, den = x.numerator, x.denominator
    if isinstance(e, int):
        return x < (Fraction(1 << e) if e >= 0 else Fraction(1, 1 << -e))
    if num & (num - 1) == 0 and den & (den - 1) == 0:
        p = num.bit_length() - den.bit_length()
        return compare_exponents(p, e) < 0
    bits = 64
    while bits <= _MAX_BITS:
        enc = pow2_enclosure(e, bits)
        if x < to_fraction(enc.lower):
            return True
        if x >= to_fraction(enc.upper):
            return False
        bits *= 2
    raise ArithmeticError("could not decide membership")


def _contains_point(box: AnchoredBox, x: Sequence[Fraction]) -> bool:
    return all(c >= 0 and _below_pow2(c, e) for c, e in zip(x, box.exps))


def _max_value(values: list) -> Value:
    if all(isinstance(v, DyadicRational) for v in values):
        return max(values)
    encs = []
    for v in values:
        if isinstance(v, DyadicRational):
            v = Enclosure(*_interval.from_rational(v.to_fraction(), 128))
        encs.append(v)
    return Enclosure(max(e.lower for e in encs), max(e.upper for e in encs))


def maximal_eval(x: Sequence, family: Sequence[AnchoredBox], f: TestFunction, precision: int = 128) -> Value:
    """``sup`` of the averages of ``f`` over the boxes of ``family`` containing ``x``."""
    pt = [_frac(c) for c in x]
    if len(pt) != f.d:
        raise ValueError(f"expected a point in R^{f.d}")
    vals = [average_over_box(b, f, precision) for b in family if _contains_point(b, pt)]
    if not vals:
        return DyadicRational(0)
    return _max_value(vals)


def superlevel_lower_bound(family: Sequence[AnchoredBox], f: TestFunction, level=1, precision: int = 64) -> UnionMeasureResult:
    """Measure of the union of boxes whose average is ``>= level``.

    Every point of such a box has ``Mf >= level``, so this bounds the
    superlevel set of the maximal operator over any basis containing
    ``family`` from below.
    """
    lev = _frac(level)
    if lev <= 0:
        raise ValueError("level must be > 0")
    survivors = [b for b in family if _at_least(b, f, lev)]
    if not survivors:
        return UnionMeasureResult(DyadicRational(0), 0, "exact", 0)
    return union_volume(survivors, None, precision)


def orlicz_rhs(f: TestFunction, alpha, precision: int = 128) -> mpfr:
    """``integral of f * log(e + f)**alpha``, natural log.

    ``f_k`` takes the single value ``2**(d*k)`` on a set of measure
    ``2**(-d*k)``, so this is ``log(e + 2**(d*k))**alpha``.
    """
    a = _frac(alpha)
    if a < 0:
        raise ValueError("alpha must be >= 0")
    with _interval.nearest(precision + _interval.GUARD_BITS):
        base = gmpy2.log(gmpy2.exp(1) + mpfr(1 << (f.d * f.k)))
        val = base ** (mpfr(a.numerator) / a.denominator)
    with _interval.nearest(precision):
        return +val
