import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dyadic_zygmund._interval import Enclosure, to_fraction
from dyadic_zygmund.bases import theorem2_family
from dyadic_zygmund.dyadic import AnchoredBox, DyadicRational, RootExponent, box_volume
from dyadic_zygmund.measure import (
    MixedModeError,
    _grid_sweep,
    sparseness_witness,
    union_volume,
    union_volume_oracle,
)

SQ2 = RootExponent(2, 2)
PAIR = [AnchoredBox([1, -1]), AnchoredBox([0, 0])]


def test_examples():
    assert union_volume([AnchoredBox([1, -1])]).value == 1
    assert union_volume(PAIR).value == Fraction(3, 2)
    assert union_volume([AnchoredBox([0, 0, 0]), AnchoredBox([-1, -2, 0]), AnchoredBox([0, -1, -3])]).value == 1


def test_oracle_examples():
    assert union_volume_oracle(PAIR) == Fraction(3, 2)
    assert union_volume_oracle(PAIR, "grid") == Fraction(3, 2)
    b = AnchoredBox([SQ2, -1, 2])
    enc = union_volume_oracle([b])
    assert isinstance(enc, Enclosure) and enc.contains(to_fraction(box_volume(b).value))


def test_oracle_overflow_and_mode_errors():
    boxes = [AnchoredBox([i, -i]) for i in range(21)]
    with pytest.raises(OverflowError):
        union_volume_oracle(boxes)
    with pytest.raises(ValueError):
        union_volume_oracle(PAIR, "montecarlo")
    with pytest.raises(MixedModeError):
        union_volume([AnchoredBox([SQ2, 0])], "exact")
    with pytest.raises(ValueError):
        union_volume([AnchoredBox([0]), AnchoredBox([0, 0])])
    with pytest.raises(ValueError):
        union_volume(PAIR, "certified", 53)


def test_modes_and_counts():
    r = union_volume(PAIR + PAIR)
    assert r.mode == "exact" and r.error == 0 and r.count == 2
    c = union_volume(PAIR, "certified")
    assert c.mode == "certified" and c.contains(Fraction(3, 2))
    m = union_volume([AnchoredBox([SQ2, -SQ2])])
    assert m.mode == "certified" and m.contains(1)


def test_sparseness_examples():
    one = sparseness_witness([AnchoredBox([2, -1, 0])])
    assert one.c_min == 1
    dup = sparseness_witness([AnchoredBox([1, 1]), AnchoredBox([1, 1])])
    assert dup.c_min == 0
    rep = sparseness_witness(PAIR, order=[0, 1])
    assert rep.witnesses[1] == Fraction(1, 2) and rep.c_min == 0.5
    assert sum(rep.witnesses) == Fraction(3, 2)
    with pytest.raises(ValueError):
        sparseness_witness(PAIR, order=[0, 0])


def test_default_order_is_decreasing_first_then_second_axis():
    boxes = [AnchoredBox([0, 2]), AnchoredBox([1, 0]), AnchoredBox([0, 3]), AnchoredBox([1, 1])]
    rep = sparseness_witness(boxes)
    assert rep.order == (3, 1, 2, 0)


def test_certified_sweep_matches_frozen_values():
    # frozen from an independent float64 prototype of the same sweep
    rep = sparseness_witness(theorem2_family(4, 25, 2))
    assert abs(float(rep.union.value) - 46.3181102271676) < 1e-9
    assert abs(rep.c_min - 0.194802654469527) < 1e-9
    assert float(rep.union.error) < 1e-12


def test_fast_path_agrees_with_generic_path():
    fam = theorem2_family(4, 30, 2)
    fast = sparseness_witness(fam)
    # an explicit order routes every witness through union_volume
    slow = sparseness_witness(fam, order=list(fast.order))
    for a, b in zip(fast.witnesses, slow.witnesses):
        assert abs(a - b) < 1e-10
    assert abs(fast.c_min - slow.c_min) < 1e-10


def test_mpfr_backend_matches_longdouble():
    fam = theorem2_family(4, 15, 2)
    lo = union_volume(fam, "certified", 64)
    hi = union_volume(fam, "certified", 100)
    assert float(hi.error) < 1e-25
    assert lo.lower <= hi.upper and hi.lower <= lo.upper


def _rand_boxes(rng, n, d, irrational=False):
    def e():
        if irrational and rng.random() < 0.4:
            return RootExponent(rng.randint(-12, 12), rng.choice([2, 3]))
        return rng.randint(-4, 4)

    return [AnchoredBox([e() for _ in range(d)]) for _ in range(n)]


def test_exact_matches_both_oracles():
    rng = random.Random(11)
    for _ in range(300):
        boxes = _rand_boxes(rng, rng.randint(1, 9), rng.randint(1, 5))
        v = union_volume(boxes).value
        assert v == union_volume_oracle(boxes) == union_volume_oracle(boxes, "grid")


def test_certified_encloses_oracles_on_irrational_boxes():
    rng = random.Random(12)
    for _ in range(80):
        boxes = _rand_boxes(rng, rng.randint(1, 6), rng.randint(2, 4), irrational=True)
        for prec in (64, 96):
            c = union_volume(boxes, "certified", prec)
            for mode in ("inclusion-exclusion", "grid"):
                ref = union_volume_oracle(boxes, mode)
                if isinstance(ref, DyadicRational):
                    assert c.contains(ref.to_fraction())
                else:
                    assert c.lower <= to_fraction(ref.upper) and to_fraction(ref.lower) <= c.upper


dyadic_boxes = st.integers(1, 5).flatmap(
    lambda d: st.lists(st.lists(st.integers(-6, 6), min_size=d, max_size=d).map(AnchoredBox), min_size=1, max_size=10)
)


@given(dyadic_boxes, st.randoms(use_true_random=False))
def test_order_and_dedup_invariance(boxes, rnd):
    v = union_volume(boxes).value
    shuffled = boxes[:] + boxes[: len(boxes) // 2]
    rnd.shuffle(shuffled)
    assert union_volume(shuffled).value == v


@given(dyadic_boxes)
def test_union_bounds(boxes):
    v = union_volume(boxes).value
    vols = [box_volume(b) for b in boxes]
    assert max(vols) <= v <= sum(vols, DyadicRational(0))


@given(dyadic_boxes)
def test_certified_contains_exact(boxes):
    exact = union_volume(boxes).value
    assert union_volume(boxes, "certified").contains(exact.to_fraction())


@given(dyadic_boxes, st.randoms(use_true_random=False))
def test_witnesses_sum_to_union(boxes, rnd):
    v = union_volume(boxes).value
    order = list(range(len(boxes)))
    rnd.shuffle(order)
    for o in (None, order):
        rep = sparseness_witness(boxes, o)
        assert sum(rep.witnesses, DyadicRational(0)) == v
        assert all(0 <= w <= box_volume(boxes[i]) for w, i in zip(rep.witnesses, rep.order))
        assert rep.carleson_ratio >= 1


@given(dyadic_boxes)
def test_grid_sweep_exact_backend_matches_recursion(boxes):
    res = _grid_sweep(boxes, 0, exact=True)
    assert DyadicRational(int(res.total), res.scale) == union_volume(boxes).value
