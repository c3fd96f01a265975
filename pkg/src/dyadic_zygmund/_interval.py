"""Directed-rounding helpers on top of MPFR (via gmpy2).

Every routine returns a pair ``(lower, upper)`` of mpfr values that encloses
the exact real result.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

GUARD_BITS = 32


def _ctx(precision: int, rounding):
    return gmpy2.context(
        precision=precision,
        round=rounding,
        emin=gmpy2.get_emin_min(),
        emax=gmpy2.get_emax_max(),
    )


def down(precision: int):
    return _ctx(precision, gmpy2.RoundDown)


def up(precision: int):
    return _ctx(precision, gmpy2.RoundUp)


def nearest(precision: int):
    return _ctx(precision, gmpy2.RoundToNearest)


def to_fraction(x) -> Fraction:
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    num, den = x.as_integer_ratio()
    return Fraction(int(num), int(den))


def from_rational(x, precision: int) -> tuple[mpfr, mpfr]:
    x = to_fraction(x)
    with down(precision):
        lo = mpfr(x.numerator) / mpfr(x.denominator) if x.denominator != 1 else mpfr(x.numerator)
    with up(precision):
        hi = mpfr(x.numerator) / mpfr(x.denominator) if x.denominator != 1 else mpfr(x.numerator)
    return lo, hi


def root_enclosure(q: int, r: int, precision: int) -> tuple[mpfr, mpfr]:
    """Enclose ``sign(q) * |q|**(1/r)``."""
    a = abs(q)
    with down(precision):
        lo = gmpy2.root(mpfr(a), r)
    with up(precision):
        hi = gmpy2.root(mpfr(a), r)
    if q < 0:
        # negation is exact, but only at the operand's precision
        return _neg(hi), _neg(lo)
    return lo, hi


def exp2_enclosure(lo: mpfr, hi: mpfr, precision: int) -> tuple[mpfr, mpfr]:
    with down(precision):
        a = gmpy2.exp2(lo)
    with up(precision):
        b = gmpy2.exp2(hi)
    return a, b


def _neg(x: mpfr) -> mpfr:
    with nearest(x.precision):
        return -x


def add(x: tuple[mpfr, mpfr], y: tuple[mpfr, mpfr], precision: int) -> tuple[mpfr, mpfr]:
    with down(precision):
        lo = x[0] + y[0]
    with up(precision):
        hi = x[1] + y[1]
    return lo, hi


def scale(x: tuple[mpfr, mpfr], c: int, precision: int) -> tuple[mpfr, mpfr]:
    if c < 0:
        x = (_neg(x[1]), _neg(x[0]))
        c = -c
    with down(precision):
        lo = x[0] * c
    with up(precision):
        hi = x[1] * c
    return lo, hi


@dataclass(frozen=True)
class Enclosure:
    """A real number known to lie in ``[lower, upper]``."""

    lower: mpfr
    upper: mpfr

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("empty enclosure")

    @classmethod
    def around(cls, value, error, precision: int = 128) -> "Enclosure":
        """Enclosure of ``value +- error`` for exact rationals (or floats)."""
        v = to_fraction(value)
        e = to_fraction(error)
        lo, _ = from_rational(v - e, precision)
        _, hi = from_rational(v + e, precision)
        return cls(lo, hi)

    @property
    def value(self) -> mpfr:
        prec = max(self.lower.precision, self.upper.precision) + 2
        with nearest(prec):
            return (self.lower + self.upper) / 2

    @property
    def error(self) -> mpfr:
        prec = max(self.lower.precision, self.upper.precision) + 2
        with up(prec):
            return (self.upper - self.lower) / 2

    def contains(self, x) -> bool:
        x = to_fraction(x)
        return to_fraction(self.lower) <= x <= to_fraction(self.upper)

    def __float__(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        return f"Enclosure({float(self.value)!r} +- {float(self.error):.3g})"
