"""Exact arithmetic for origin-anchored dyadic boxes.

A box here is always ``[0, 2**e_1) x ... x [0, 2**e_d)``.  Exponents are
either Python integers or :class:`RootExponent` values ``sign(q)|q|**(1/r)``,
which is the family needed to hold ``tau^{-1}(n) = n**(1/(d-2))``.  All
comparisons between exponents are exact (integer cross-powering); floating
point only appears when an irrational volume has to be evaluated, and then
through :class:`Enclosure` with directed rounding.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import gmpy2

from . import _interval
from ._interval import Enclosure

__all__ = [
    "Ordering",
    "RootExponent",
    "Exponent",
    "DyadicRational",
    "ExponentVec",
    "AnchoredBox",
    "Enclosure",
    "compare_exponents",
    "normalize_exponent",
    "exponent_keys",
    "exponent_enclosure",
    "pow2_enclosure",
    "ExponentSum",
    "box_volume",
    "intersect_anchored",
    "contains_cube",
    "cube",
]


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


def _sign(x: int) -> int:
    return (x > 0) - (x < 0)


@functools.total_ordering
class RootExponent:
    """The real number ``sign(q) * |q|**(1/r)``.

    Integral values compare and hash like the corresponding ``int``, so
    ``RootExponent(9, 2) == 3`` and both land in the same dict slot.
    """

    __slots__ = ("q", "r")

    def __init__(self, q: int, r: int = 1):
        q, r = int(q), int(r)
        if r < 1:
            raise ValueError(f"root must be >= 1, got {r}")
        self.q = q
        self.r = r

    def __repr__(self) -> str:
        return f"RootExponent({self.q}, {self.r})"

    def sign(self) -> int:
        return _sign(self.q)

    def is_integer(self) -> bool:
        if self.r == 1 or self.q == 0:
            return True
        return bool(gmpy2.iroot(abs(self.q), self.r)[1])

    def __int__(self) -> int:
        if not self.is_integer():
            raise ValueError(f"{self!r} is irrational")
        if self.r == 1:
            return self.q
        return self.sign() * int(gmpy2.iroot(abs(self.q), self.r)[0])

    def reduced(self) -> "RootExponent":
        """Same value with the smallest possible root."""
        a, r = abs(self.q), self.r
        if a in (0, 1):
            return RootExponent(self.q, 1)
        for g in sorted((g for g in range(2, r + 1) if r % g == 0), reverse=True):
            base, exact = gmpy2.iroot(a, g)
            if exact:
                return RootExponent(self.sign() * int(base), r // g)
        return RootExponent(self.q, r)

    def __neg__(self) -> "RootExponent":
        return RootExponent(-self.q, self.r)

    def __abs__(self) -> "RootExponent":
        return RootExponent(abs(self.q), self.r)

    def __eq__(self, other):
        if not isinstance(other, (int, RootExponent)):
            return NotImplemented
        return compare_exponents(self, other) == Ordering.EQUAL

    def __lt__(self, other):
        if not isinstance(other, (int, RootExponent)):
            return NotImplemented
        return compare_exponents(self, other) == Ordering.LESS

    def __hash__(self):
        if self.is_integer():
            return hash(int(self))
        red = self.reduced()
        return hash(("RootExponent", red.q, red.r))

    def __float__(self) -> float:
        return float(exponent_enclosure(self, 80)[0])


Exponent = Union[int, RootExponent]


def _as_qr(e: Exponent) -> tuple[int, int]:
    if isinstance(e, RootExponent):
        return e.q, e.r
    if isinstance(e, bool) or not isinstance(e, int):
        raise TypeError(f"exponent must be int or RootExponent, got {type(e).__name__}")
    return e, 1


def normalize_exponent(e: Exponent) -> Exponent:
    """Collapse integral root exponents to plain ints."""
    if isinstance(e, RootExponent):
        return int(e) if e.is_integer() else e
    _as_qr(e)
    return e


def compare_exponents(a: Exponent, b: Exponent) -> Ordering:
    """Exact order of two exponents, by sign analysis and cross-powering."""
    qa, ra = _as_qr(a)
    qb, rb = _as_qr(b)
    sa, sb = _sign(qa), _sign(qb)
    if sa != sb:
        return Ordering(_sign(sa - sb))
    if sa == 0:
        return Ordering.EQUAL
    # |a| vs |b|  <=>  |qa|**rb vs |qb|**ra
    c = _sign(abs(qa) ** rb - abs(qb) ** ra)
    return Ordering(c * sa)


def exponent_keys(values: Sequence[Exponent]) -> list[int]:
    """Integer keys whose order agrees exactly with the order of ``values``.

    The key of ``sign(q)|q|**(1/r)`` is ``sign(q)|q|**(L/r)`` with ``L`` the
    lcm of all roots present; ``x -> sign(x)|x|**L`` is strictly increasing.
    """
    qr = [_as_qr(v) for v in values]
    L = 1
    for _, r in qr:
        L = L * r // math.gcd(L, r)
    return [_sign(q) * abs(q) ** (L // r) for q, r in qr]


def exponent_enclosure(e: Exponent, precision: int) -> tuple:
    q, r = _as_qr(e)
    if r == 1:
        return _interval.from_rational(q, precision)
    return _interval.root_enclosure(q, r, precision)


def pow2_enclosure(e: Exponent, precision: int) -> Enclosure:
    """Directed-rounding enclosure of ``2**e``."""
    lo, hi = exponent_enclosure(e, precision)
    return Enclosure(*_interval.exp2_enclosure(lo, hi, precision))


@functools.total_ordering
class DyadicRational:
    """``numerator * 2**exponent``, kept with an odd (or zero) numerator."""

    __slots__ = ("numerator", "exponent")

    def __init__(self, numerator: int, exponent: int = 0):
        numerator, exponent = int(numerator), int(exponent)
        if numerator == 0:
            exponent = 0
        else:
            tz = (numerator & -numerator).bit_length() - 1
            numerator >>= tz
            exponent += tz
        self.numerator = numerator
        self.exponent = exponent

    @classmethod
    def pow2(cls, e: int) -> "DyadicRational":
        return cls(1, e)

    @classmethod
    def from_fraction(cls, x) -> "DyadicRational":
        x = Fraction(x)
        den = x.denominator
        if den & (den - 1):
            raise ValueError(f"{x} is not dyadic")
        return cls(x.numerator, -(den.bit_length() - 1))

    def to_fraction(self) -> Fraction:
        if self.exponent >= 0:
            return Fraction(self.numerator << self.exponent)
        return Fraction(self.numerator, 1 << -self.exponent)

    def as_integer_ratio(self) -> tuple[int, int]:
        f = self.to_fraction()
        return f.numerator, f.denominator

    @staticmethod
    def _coerce(other):
        if isinstance(other, DyadicRational):
            return other
        if isinstance(other, int) and not isinstance(other, bool):
            return DyadicRational(other)
        if isinstance(other, Fraction):
            return DyadicRational.from_fraction(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        e = min(self.exponent, o.exponent)
        n = (self.numerator << (self.exponent - e)) + (o.numerator << (o.exponent - e))
        return DyadicRational(n, e)

    __radd__ = __add__

    def __neg__(self):
        return DyadicRational(-self.numerator, self.exponent)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return DyadicRational(self.numerator * o.numerator, self.exponent + o.exponent)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, DyadicRational):
            return self.numerator == other.numerator and self.exponent == other.exponent
        if isinstance(other, (int, Fraction)):
            return self.to_fraction() == other
        return NotImplemented

    def __lt__(self, other):
        o = other.to_fraction() if isinstance(other, DyadicRational) else other
        if not isinstance(o, (int, Fraction)):
            return NotImplemented
        return self.to_fraction() < o

    def __hash__(self):
        return hash(self.to_fraction())

    def __float__(self) -> float:
        return float(self.to_fraction())

    def __bool__(self) -> bool:
        return self.numerator != 0

    def __repr__(self) -> str:
        return f"DyadicRational({self.numerator}, {self.exponent})"

    def __str__(self) -> str:
        return str(self.to_fraction())


@dataclass(frozen=True)
class ExponentVec:
    """Integer log2 side lengths of a dyadic box."""

    e: tuple[int, ...]

    def __init__(self, e: Iterable[int]):
        e = tuple(e)
        for x in e:
            if isinstance(x, bool) or not isinstance(x, int):
                raise TypeError("ExponentVec entries must be integers")
        if not e:
            raise ValueError("dimension must be >= 1")
        object.__setattr__(self, "e", e)

    @property
    def d(self) -> int:
        return len(self.e)

    def __iter__(self):
        return iter(self.e)

    def __len__(self):
        return len(self.e)

    def __getitem__(self, i):
        return self.e[i]

    def to_box(self) -> "AnchoredBox":
        return AnchoredBox(self.e)


@dataclass(frozen=True)
class AnchoredBox:
    """``[0, 2**exps[0]) x ... x [0, 2**exps[d-1])``."""

    exps: tuple[Exponent, ...]

    def __init__(self, exps: Iterable[Exponent]):
        exps = tuple(normalize_exponent(e) for e in exps)
        if not exps:
            raise ValueError("dimension must be >= 1")
        object.__setattr__(self, "exps", exps)

    @property
    def d(self) -> int:
        return len(self.exps)

    def is_integral(self) -> bool:
        return all(isinstance(e, int) for e in self.exps)

    def volume(self, precision: int = 128):
        return box_volume(self, precision)

    def __repr__(self) -> str:
        return f"AnchoredBox({list(self.exps)!r})"


def cube(d: int, e: int) -> AnchoredBox:
    return AnchoredBox((e,) * d)


@functools.lru_cache(maxsize=65536)
def _radical(a: int, r: int) -> tuple[int, int]:
    """Write ``a**(1/r)`` as ``c * b**(1/r)`` with ``b`` free of r-th powers."""
    c, b, f = 1, a, 2
    while f ** r <= b:
        fr = f ** r
        while b % fr == 0:
            b //= fr
            c *= f
        f += 1
    return c, b


class ExponentSum:
    """Exact sum of exponents: an integer plus integer multiples of radicals.

    Every irrational term is brought to the form ``c * b**(1/r)`` with ``r``
    minimal and ``b`` free of r-th powers.  Two such radicals are rational
    multiples of each other only if they coincide, and distinct ones are
    linearly independent over Q together with 1, so ``is_integer`` is exact.
    """

    def __init__(self, terms: Iterable[Exponent] = ()):
        self.integer = 0
        self.surds: dict[tuple[int, int], int] = {}
        for t in terms:
            self.add(t)

    def add(self, e: Exponent, coef: int = 1) -> "ExponentSum":
        e = normalize_exponent(e)
        if isinstance(e, int):
            self.integer += coef * e
            return self
        red = e.reduced()
        c, b = _radical(abs(red.q), red.r)
        key = (b, red.r)
        total = self.surds.get(key, 0) + coef * c * red.sign()
        if total:
            self.surds[key] = total
        else:
            self.surds.pop(key, None)
        return self

    def is_integer(self) -> bool:
        return not self.surds

    def enclosure(self, precision: int) -> tuple:
        acc = _interval.from_rational(self.integer, precision)
        for (a, r), c in sorted(self.surds.items()):
            acc = _interval.add(acc, _interval.scale(_interval.root_enclosure(a, r, precision), c, precision), precision)
        return acc


def box_volume(b: AnchoredBox, precision: int = 128):
    """Volume ``2**sum(exps)``.

    Returns a :class:`DyadicRational` whenever the exponent sum is provably an
    integer, otherwise an :class:`Enclosure` computed at ``precision`` bits.
    """
    s = ExponentSum(b.exps)
    if s.is_integer():
        return DyadicRational.pow2(s.integer)
    if precision < 64:
        raise ValueError("certified volumes need precision >= 64 bits")
    lo, hi = s.enclosure(precision + _interval.GUARD_BITS)
    return Enclosure(*_interval.exp2_enclosure(lo, hi, precision + _interval.GUARD_BITS))


def _min_exp(a: Exponent, b: Exponent) -> Exponent:
    return a if compare_exponents(a, b) <= 0 else b


def intersect_anchored(a: AnchoredBox, b: AnchoredBox) -> AnchoredBox:
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    return AnchoredBox(_min_exp(x, y) for x, y in zip(a.exps, b.exps))


def contains_cube(b: AnchoredBox, k: int) -> bool:
    """Whether ``b`` contains ``[0, 2**-k)**d``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return all(compare_exponents(e, -k) >= 0 for e in b.exps)
