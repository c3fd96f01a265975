"""Lebesgue measure of unions of origin-anchored boxes.

Two independent engines plus two brute-force oracles:

* exact mode: recursive dimension sweep over integer exponents with dominated
  boxes pruned at every level; returns a :class:`DyadicRational`.
* certified mode: sweep along axis 1 in decreasing order while keeping, on the
  exact grid spanned by axes 3..d, the running maximum of the axis-2 extent
  of boxes already swept.  Each box then contributes
  ``L_1 * sum_cells vol(c) * max(0, h_2 - H(c))``, which is also its greedy
  sparseness witness ``|R \\ (earlier boxes)|``.  Arithmetic runs in 64-bit
  mantissa extended precision (or MPFR above 64 bits) with an a-priori
  rounding-error bound.
* oracles: inclusion-exclusion over all subsets, and cell enumeration over
  the full product grid.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import gmpy2
import numpy as np
from gmpy2 import mpfr

from . import _interval
from ._interval import Enclosure, to_fraction
from .dyadic import (
    AnchoredBox,
    DyadicRational,
    ExponentSum,
    box_volume,
    exponent_keys,
    intersect_anchored,
    pow2_enclosure,
)

__all__ = [
    "MixedModeError",
    "UnionMeasureResult",
    "SparsenessReport",
    "union_volume",
    "union_volume_oracle",
    "sparseness_witness",
    "dedup_boxes",
]

_LONGDOUBLE_OK = np.finfo(np.longdouble).nmant >= 63


class MixedModeError(ValueError):
    """Exact arithmetic requested for boxes with irrational exponents."""


@dataclass(frozen=True)
class UnionMeasureResult:
    value: Union[DyadicRational, mpfr]
    error: Union[int, mpfr]
    mode: str
    count: int

    @property
    def lower(self) -> Fraction:
        return to_fraction(self.value) - to_fraction(self.error)

    @property
    def upper(self) -> Fraction:
        return to_fraction(self.value) + to_fraction(self.error)

    def contains(self, x) -> bool:
        return self.lower <= to_fraction(x) <= self.upper

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class SparsenessReport:
    order: tuple[int, ...]
    witnesses: tuple  # |E(R)| per box, listed in `order`
    c_min: float
    c_min_error: float
    carleson_ratio: float
    total_volume: float
    union: UnionMeasureResult

    @property
    def witness_sum(self):
        return sum(self.witnesses)


def _check_dims(boxes: Sequence[AnchoredBox]) -> int:
    if not boxes:
        raise ValueError("need at least one box")
    d = boxes[0].d
    if any(b.d != d for b in boxes):
        raise ValueError("all boxes must have the same dimension")
    return d


def dedup_boxes(boxes: Sequence[AnchoredBox]) -> list[AnchoredBox]:
    """Drop exact duplicates, keeping first occurrences in order."""
    seen = set()
    out = []
    for b in boxes:
        if b.exps not in seen:
            seen.add(b.exps)
            out.append(b)
    return out


# ---------------------------------------------------------------- exact sweep


def _maximal(points):
    pts = sorted(set(points), reverse=True)
    keep = []
    for p in pts:
        if not any(all(x <= y for x, y in zip(p, q)) for q in keep):
            keep.append(p)
    return keep


def _staircase(points) -> int:
    pts = sorted(_maximal(points), reverse=True)  # x decreasing, y increasing
    area = 0
    for i, (x, y) in enumerate(pts):
        nxt = (1 << pts[i + 1][0]) if i + 1 < len(pts) else 0
        area += ((1 << x) - nxt) << y
    return area


def _sweep_int(points, memo) -> int:
    d = len(points[0])
    if d == 1:
        return 1 << max(p[0] for p in points)
    if d == 2:
        return _staircase(points)
    pts = _maximal(points)
    key = frozenset(pts)
    if key in memo:
        return memo[key]
    firsts = sorted({p[0] for p in pts}, reverse=True)
    total = 0
    alive = []
    for s, v in enumerate(firsts):
        alive.extend(p[1:] for p in pts if p[0] == v)
        nxt = (1 << firsts[s + 1]) if s + 1 < len(firsts) else 0
        total += ((1 << v) - nxt) * _sweep_int(alive, memo)
    memo[key] = total
    return total


def _exact_union(boxes: Sequence[AnchoredBox]) -> DyadicRational:
    if not all(b.is_integral() for b in boxes):
        raise MixedModeError("exact mode needs integer exponents")
    d = boxes[0].d
    emin = [min(b.exps[i] for b in boxes) for i in range(d)]
    pts = [tuple(e - m for e, m in zip(b.exps, emin)) for b in boxes]
    return DyadicRational(_sweep_int(pts, {}), sum(emin))


# ------------------------------------------------------------ certified sweep


class _Backend:
    """Numeric representation used by the grid sweep."""

    def __init__(self, kind: str, precision: int):
        self.kind = kind
        self.precision = precision
        if kind == "exact":
            self.u = 0.0
        elif kind == "longdouble":
            self.u = 2.0 ** -64
        else:
            self.u = 2.0 ** -precision

    @property
    def dtype(self):
        return np.longdouble if self.kind == "longdouble" else object

    def zero(self):
        return np.longdouble(0) if self.kind == "longdouble" else 0

    def context(self):
        if self.kind == "mpfr":
            return _interval.nearest(self.precision)
        return _NullContext()

    def convert(self, enc: Enclosure):
        """Round an enclosure midpoint to the backend; returns (x, relative error bound)."""
        mid = enc.value
        bits = 64 if self.kind == "longdouble" else self.precision
        with _interval.nearest(bits):
            x = +mid
        with _interval.up(64):
            err = (max(x - mid, mid - x) + enc.error) / enc.lower
        if self.kind == "longdouble":
            x = _mpfr_to_longdouble(x)
        return x, float(err)


class _NullContext:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _mpfr_to_longdouble(x: mpfr) -> np.longdouble:
    """Exact conversion of an mpfr with at most 64 significant bits."""
    m, e = x.as_mantissa_exp()
    m, e = int(m), int(e)
    if abs(m).bit_length() > 64:
        raise ValueError("more than 64 significant bits")
    hi, lo = divmod(abs(m), 1 << 32)
    val = np.longdouble(hi) * np.longdouble(4294967296.0) + np.longdouble(lo)
    return np.ldexp(-val if m < 0 else val, e)


def _gamma(n: int, u: float) -> float:
    nu = n * u
    if nu >= 0.01:
        raise ArithmeticError("rounding-error bound breaks down; raise the precision")
    return nu / (1 - nu)


@dataclass
class _SweepResult:
    order: list[int]
    witnesses: list  # backend numbers, in `order`
    witness_err: list[float]  # absolute bounds, in `order`
    total: object
    total_err: float
    volumes: list[float]  # approximate |R| in `order`
    kind: str
    scale: int = 0  # exact backend: values are in units of 2**scale


def _default_order(boxes: Sequence[AnchoredBox]) -> list[int]:
    d = boxes[0].d
    keys = [exponent_keys([b.exps[a] for b in boxes]) for a in range(d)]
    return sorted(range(len(boxes)), key=lambda i: tuple(-keys[a][i] for a in range(d)))


def _grid_sweep(boxes: Sequence[AnchoredBox], precision: int, exact: bool, max_cells: int = 50_000_000) -> _SweepResult:
    d = _check_dims(boxes)
    n = len(boxes)
    if exact:
        if not all(b.is_integral() for b in boxes):
            raise MixedModeError("exact mode needs integer exponents")
        be = _Backend("exact", 0)
    elif precision < 64:
        raise ValueError("certified mode needs precision >= 64 bits")
    elif precision == 64 and _LONGDOUBLE_OK:
        be = _Backend("longdouble", 64)
    else:
        be = _Backend("mpfr", precision)
    work_prec = max(precision, 64) + _interval.GUARD_BITS

    order = _default_order(boxes)
    ob = [boxes[i] for i in order]

    # distinct exponent values per axis, exactly sorted
    axis_vals = []
    axis_idx = []
    for a in range(d):
        col = [b.exps[a] for b in ob]
        keys = exponent_keys(col)
        uniq = sorted(set(keys))
        rank = {k: r for r, k in enumerate(uniq)}
        rep = {}
        for k, v in zip(keys, col):
            rep.setdefault(k, v)
        axis_vals.append([rep[k] for k in uniq])
        axis_idx.append(np.array([rank[k] for k in keys], dtype=np.int64))

    eps_in = 0.0
    if be.kind == "exact":
        emin = [min(vals) for vals in axis_vals]
        scale = sum(emin)

        def lengths(a):
            return [1 << (v - emin[a]) for v in axis_vals[a]]

        def widths(a):
            ls = lengths(a)
            return [ls[0]] + [ls[c] - ls[c - 1] for c in range(1, len(ls))]

    else:
        scale = 0
        pow_cache = {}

        def enc(a, c):
            if (a, c) not in pow_cache:
                pow_cache[(a, c)] = pow2_enclosure(axis_vals[a][c], work_prec)
            return pow_cache[(a, c)]

        def lengths(a):
            nonlocal eps_in
            out = []
            for c in range(len(axis_vals[a])):
                x, e = be.convert(enc(a, c))
                eps_in = max(eps_in, e)
                out.append(x)
            return out

        def widths(a):
            nonlocal eps_in
            out = []
            for c in range(len(axis_vals[a])):
                if c == 0:
                    w = enc(a, 0)
                else:
                    hi, lo = enc(a, c), enc(a, c - 1)
                    with _interval.down(work_prec):
                        wl = hi.lower - lo.upper
                    with _interval.up(work_prec):
                        wu = hi.upper - lo.lower
                    w = Enclosure(wl, wu)
                x, e = be.convert(w)
                eps_in = max(eps_in, e)
                out.append(x)
            return out

    if d == 1:
        L = lengths(0)
        idx = axis_idx[0]
        wit = [be.zero()] * n
        wit[0] = L[idx[0]]
        wl = [float(L[i]) for i in idx]
        err = [float(wl[0]) * eps_in] + [0.0] * (n - 1)
        return _SweepResult(order, wit, err, wit[0], err[0], wl, be.kind, scale)

    with be.context():
        L1 = lengths(0)
        L2 = lengths(1)
        rest = list(range(2, d))
        shape = tuple(len(axis_vals[a]) for a in rest)
        cells = math.prod(shape)
        if cells > max_cells:
            raise MemoryError(f"grid of {cells} cells exceeds max_cells={max_cells}")
        rest_len = [lengths(a) for a in rest]
        vol = np.ones(shape, dtype=be.dtype) if be.kind == "longdouble" else np.full(shape, 1, dtype=object)
        for pos, a in enumerate(rest):
            w = np.array(widths(a), dtype=be.dtype)
            vol = vol * w.reshape([-1 if p == pos else 1 for p in range(len(rest))])
        vol = np.ascontiguousarray(vol)

        # axis-2 extents non-decreasing along the order: every earlier box is
        # at most as tall, so the clipping max(0, .) is never active
        k2 = exponent_keys([b.exps[1] for b in ob])
        antichain = all(k2[i] <= k2[i + 1] for i in range(n - 1))

        H = np.zeros(shape, dtype=be.dtype) if be.kind == "longdouble" else np.full(shape, 0, dtype=object)
        VH = H.copy() if antichain else None
        i1, i2 = axis_idx[0], axis_idx[1]
        ir = [axis_idx[a] for a in rest]
        wit = []
        vols = []
        errs = []
        max_slice = 1
        for q in range(n):
            sl = tuple(slice(0, int(ix[q]) + 1) for ix in ir) if rest else Ellipsis
            h = L2[i2[q]]
            L = L1[i1[q]]
            bvol = be.zero() + 1
            for a, ix in zip(rest_len, ir):
                bvol = bvol * a[ix[q]]
            if antichain:
                S = h * bvol - VH[sl].sum()
                VH[sl] = vol[sl] * h
            else:
                diff = h - H[sl]
                diff = np.where(diff > 0, diff, 0) if be.dtype is object else np.maximum(diff, 0)
                S = (diff * vol[sl]).sum()
                Hs = H[sl]
                H[sl] = np.where(Hs > h, Hs, h) if be.dtype is object else np.maximum(Hs, h)
            E = L * S
            wit.append(E)
            rv = float(L) * float(h) * float(bvol)
            vols.append(rv)
            if rest:
                size = 1
                for ix in ir:
                    size *= int(ix[q]) + 1
                max_slice = max(max_slice, size)
        total = be.zero()
        for E in wit:
            total = total + E

    if be.kind == "exact":
        return _SweepResult(order, wit, [0.0] * n, total, 0.0, vols, be.kind, scale)

    u = be.u
    eps_vol = (1 + eps_in) ** max(d - 2, 0) * (1 + u) ** max(d - 3, 0) - 1
    kappa = 2.0 * (eps_vol + 4 * eps_in + 6 * u + _gamma(max_slice + 2, u))
    # |R| from rounded inputs overestimates by at most a factor 1 + O(d * eps)
    errs = [kappa * v * (1 + 1e-6) for v in vols]
    total_err = (sum(errs) + _gamma(n + 1, u) * sum(abs(float(E)) for E in wit)) * 1.01
    return _SweepResult(order, wit, errs, total, total_err, vols, be.kind, scale)


def _to_mpfr(x) -> mpfr:
    """Exact conversion of a backend number to mpfr."""
    if isinstance(x, mpfr):
        return x
    num, den = (int(v) for v in x.as_integer_ratio())
    return mpfr(gmpy2.mpq(num, den), max(num.bit_length(), 2))


def _err_mpfr(e: float) -> mpfr:
    with _interval.up(64):
        return mpfr(e)


def _result_from_sweep(res: _SweepResult, count: int) -> UnionMeasureResult:
    if res.kind == "exact":
        return UnionMeasureResult(DyadicRational(int(res.total), res.scale), 0, "exact", count)
    return UnionMeasureResult(_to_mpfr(res.total), _err_mpfr(res.total_err), "certified", count)


def union_volume(boxes: Sequence[AnchoredBox], mode: Optional[str] = None, precision: int = 64) -> UnionMeasureResult:
    """Measure of the union of ``boxes``.

    ``mode`` is ``"exact"`` (integer exponents only), ``"certified"``, or
    ``None`` to pick exact whenever every exponent is an integer.
    """
    _check_dims(boxes)
    boxes = dedup_boxes(boxes)
    integral = all(b.is_integral() for b in boxes)
    if mode is None:
        mode = "exact" if integral else "certified"
    if mode == "exact":
        if not integral:
            raise MixedModeError("exact mode needs integer exponents")
        return UnionMeasureResult(_exact_union(boxes), 0, "exact", len(boxes))
    if mode != "certified":
        raise ValueError(f"unknown mode {mode!r}")
    return _result_from_sweep(_grid_sweep(boxes, precision, exact=False), len(boxes))


# -------------------------------------------------------------------- oracles


def _ie_exact(boxes) -> DyadicRational:
    d = boxes[0].d
    emin = [min(b.exps[i] for b in boxes) for i in range(d)]
    pts = [tuple(e - m for e, m in zip(b.exps, emin)) for b in boxes]
    n = len(pts)
    total = 0

    def rec(start, cur, size):
        nonlocal total
        for i in range(start, n):
            nxt = pts[i] if cur is None else tuple(min(a, b) for a, b in zip(cur, pts[i]))
            sign = 1 if size % 2 == 0 else -1
            total += sign << sum(nxt)
            rec(i + 1, nxt, size + 1)

    rec(0, None, 0)
    return DyadicRational(total, sum(emin))


def _ie_certified(boxes, precision) -> Enclosure:
    n = len(boxes)
    lo = mpfr(0)
    hi = mpfr(0)
    for size in range(1, n + 1):
        for subset in itertools.combinations(boxes, size):
            inter = subset[0]
            for b in subset[1:]:
                inter = intersect_anchored(inter, b)
            v = box_volume(inter, precision)
            if isinstance(v, DyadicRational):
                v = Enclosure(*_interval.from_rational(v.to_fraction(), precision))
            if size % 2:
                with _interval.down(precision):
                    lo = lo + v.lower
                with _interval.up(precision):
                    hi = hi + v.upper
            else:
                with _interval.down(precision):
                    lo = lo - v.upper
                with _interval.up(precision):
                    hi = hi - v.lower
    return Enclosure(lo, hi)


def _grid_cells(boxes, resolution):
    d = boxes[0].d
    axis_vals, axis_idx = [], []
    for a in range(d):
        col = [b.exps[a] for b in boxes]
        keys = exponent_keys(col)
        uniq = sorted(set(keys))
        rank = {k: r for r, k in enumerate(uniq)}
        rep = dict(zip(keys, col))
        axis_vals.append([rep[k] for k in uniq])
        axis_idx.append([rank[k] for k in keys])
    shape = tuple(len(v) for v in axis_vals)
    covered = np.zeros(shape, dtype=bool)
    for i in range(len(boxes)):
        covered[tuple(slice(0, axis_idx[a][i] + 1) for a in range(d))] = True
    return axis_vals, covered


def union_volume_oracle(boxes: Sequence[AnchoredBox], mode: str = "inclusion-exclusion", resolution: int = 128, max_boxes: int = 20, max_cells: int = 2_000_000):
    """Brute-force union measure, independent of :func:`union_volume`.

    ``inclusion-exclusion`` sums ``(-1)^{|S|+1} |cap S|`` over all non-empty
    subsets.  ``grid`` marks every cell of the product grid spanned by the
    box corners as covered or not and adds up covered cell volumes.  Both are
    exact (``DyadicRational``) for integer exponents and return an
    :class:`Enclosure` at ``resolution`` bits otherwise.
    """
    _check_dims(boxes)
    boxes = dedup_boxes(boxes)
    integral = all(b.is_integral() for b in boxes)
    if mode == "inclusion-exclusion":
        if len(boxes) > max_boxes:
            raise OverflowError(f"{len(boxes)} boxes means 2**{len(boxes)} subsets (limit {max_boxes})")
        return _ie_exact(boxes) if integral else _ie_certified(boxes, resolution)
    if mode != "grid":
        raise ValueError(f"unknown oracle mode {mode!r}")
    axis_vals, covered = _grid_cells(boxes, resolution)
    if covered.size > max_cells:
        raise OverflowError(f"grid has {covered.size} cells (limit {max_cells})")
    d = boxes[0].d
    cells = np.argwhere(covered)
    if integral:
        emin = [min(v) for v in axis_vals]
        widths = []
        for a in range(d):
            ls = [1 << (v - emin[a]) for v in axis_vals[a]]
            widths.append([ls[0]] + [ls[c] - ls[c - 1] for c in range(1, len(ls))])
        total = 0
        for cell in cells:
            total += math.prod(widths[a][c] for a, c in enumerate(cell))
        return DyadicRational(total, sum(emin))
    w_lo, w_hi = [], []
    for a in range(d):
        encs = [pow2_enclosure(v, resolution) for v in axis_vals[a]]
        lo_a, hi_a = [encs[0].lower], [encs[0].upper]
        for c in range(1, len(encs)):
            with _interval.down(resolution):
                lo_a.append(encs[c].lower - encs[c - 1].upper)
            with _interval.up(resolution):
                hi_a.append(encs[c].upper - encs[c - 1].lower)
        w_lo.append(lo_a)
        w_hi.append(hi_a)
    lo = mpfr(0)
    hi = mpfr(0)
    for cell in cells:
        with _interval.down(resolution):
            lo = lo + math.prod((w_lo[a][c] for a, c in enumerate(cell)), start=mpfr(1))
        with _interval.up(resolution):
            hi = hi + math.prod((w_hi[a][c] for a, c in enumerate(cell)), start=mpfr(1))
    return Enclosure(lo, hi)


# ----------------------------------------------------------------- sparseness


def _vol_float(b: AnchoredBox) -> float:
    v = box_volume(b)
    return float(v)


def sparseness_witness(boxes: Sequence[AnchoredBox], order: Optional[Sequence[int]] = None, precision: int = 64) -> SparsenessReport:
    """Greedy disjoint witnesses ``E(R_i) = R_i minus the earlier boxes``.

    Without ``order`` the boxes are taken by decreasing first exponent, then
    decreasing second (then the remaining axes); that order comes straight
    out of the union sweep.  An explicit ``order`` is a permutation of
    ``range(len(boxes))`` and costs one union computation per box.
    """
    _check_dims(boxes)
    integral = all(b.is_integral() for b in boxes)
    if order is None:
        res = _grid_sweep(boxes, precision, exact=integral)
        union = _result_from_sweep(res, len(dedup_boxes(boxes)))
        if integral:
            wit = tuple(DyadicRational(int(w), res.scale) for w in res.witnesses)
            vols = [box_volume(boxes[i]) for i in res.order]
            ratios = [w.to_fraction() / v.to_fraction() for w, v in zip(wit, vols)]
            c_min, c_err = float(min(ratios)), 0.0
            total = float(sum(v.to_fraction() for v in vols))
        else:
            wit = tuple(float(w) for w in res.witnesses)
            ratios = [(float(w) / v, e / v) for w, v, e in zip(res.witnesses, res.volumes, res.witness_err)]
            c_min, c_err = min(ratios)
            c_err = max(e for _, e in ratios) * 1.01 + 1e-15
            total = math.fsum(res.volumes)
        return SparsenessReport(tuple(res.order), wit, c_min, c_err, total / float(union.value), total, union)

    order = tuple(order)
    if sorted(order) != list(range(len(boxes))):
        raise ValueError("order must be a permutation of the box indices")
    mode = "exact" if integral else "certified"
    wit = []
    ratios = []
    errs = []
    for pos, i in enumerate(order):
        b = boxes[i]
        bv = box_volume(b, max(precision, 64))
        if pos == 0:
            covered = None
        else:
            covered = union_volume([intersect_anchored(b, boxes[l]) for l in order[:pos]], mode, precision)
        if integral:
            w = bv - (covered.value if covered is not None else 0)
            wit.append(w)
            ratios.append(w.to_fraction() / bv.to_fraction())
            errs.append(0.0)
        else:
            bvf = float(bv)
            bve = float(bv.error) if isinstance(bv, Enclosure) else 0.0
            cv = float(covered.value) if covered is not None else 0.0
            ce = float(covered.error) if covered is not None else 0.0
            w = bvf - cv
            wit.append(w)
            ratios.append(w / bvf)
            errs.append((ce + bve + 1e-15 * bvf) / bvf * 1.01)
    union = union_volume(boxes, mode, precision)
    total = sum(float(box_volume(b)) for b in boxes)
    c_min = float(min(ratios))
    return SparsenessReport(order, tuple(wit), c_min, max(errs) if errs else 0.0, total / float(union.value), total, union)
