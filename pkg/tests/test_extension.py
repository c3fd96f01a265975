import numpy as np
import pytest
from hypothesis import given, strategies as st

from dyadic_zygmund.extension import (
    MonotoneExtension,
    SeedFunction,
    antidiagonal_mismatches,
    extend_eval,
    verify_monotone,
)


def brute(seed, m1, m2):
    if m1 >= -m2:
        return max(seed(m) for m in range(-m2, m1 + 1))
    return min(seed(m) for m in range(m1, -m2 + 1))


def test_constant_seed():
    ext = MonotoneExtension(SeedFunction.constant(7, -3, 3))
    assert all(extend_eval(ext, a, b) == 7 for a in range(-6, 7) for b in range(-6, 7))


def test_three_point_seed():
    ext = MonotoneExtension(SeedFunction((5, 0, 3), lo=-1))
    assert ext(1, 1) == 5
    assert ext(-1, 0) == 0
    assert ext(1, -1) == 3


def test_identity_and_negation_closed_forms():
    n = 16
    idx = MonotoneExtension(SeedFunction.from_callable(lambda m: m, -2 * n - 2, 2 * n + 2))
    neg = MonotoneExtension(SeedFunction.from_callable(lambda m: -m, -2 * n - 2, 2 * n + 2))
    assert verify_monotone(idx, n).ok and verify_monotone(neg, n).ok
    r = np.arange(-n, n + 1)
    assert (idx.evaluate(r[:, None], r[None, :]) == r[:, None]).all()
    assert (neg.evaluate(r[:, None], r[None, :]) == r[None, :]).all()


def test_zero_seed_monotone():
    assert verify_monotone(MonotoneExtension(SeedFunction.constant(0)), 4).ok


def test_violation_is_reported():
    class Broken(MonotoneExtension):
        def evaluate(self, m1, m2):
            return -np.broadcast_arrays(np.asarray(m1), np.asarray(m2))[0]

    rep = verify_monotone(Broken(SeedFunction.constant(0)), 2)
    assert not rep.ok
    axis, m1, m2, before, after = rep.violation
    assert axis == 0 and after < before


def test_empty_window_rejected():
    with pytest.raises(ValueError):
        SeedFunction(())
    with pytest.raises(ValueError):
        verify_monotone(MonotoneExtension(SeedFunction.constant(0)), 0)


seeds = st.integers(-8, 8).flatmap(
    lambda lo: st.lists(st.integers(-20, 20), min_size=1, max_size=25).map(lambda v: SeedFunction(tuple(v), lo))
)


@given(seeds, st.integers(-30, 30), st.integers(-30, 30))
def test_matches_brute_force(seed, m1, m2):
    assert MonotoneExtension(seed)(m1, m2) == brute(seed, m1, m2)


@given(seeds)
def test_lemma_properties(seed):
    ext = MonotoneExtension(seed)
    assert antidiagonal_mismatches(ext, range(-30, 31)) == []
    assert verify_monotone(ext, 30).ok


@given(seeds, st.integers(-30, 30))
def test_branches_agree_on_antidiagonal(seed, m):
    # max over [m, m] and min over [m, m] are both phi(m)
    assert brute(seed, m, -m) == seed(m) == MonotoneExtension(seed)(m, -m)
