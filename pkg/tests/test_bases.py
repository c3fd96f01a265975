import itertools
import random

import pytest
from hypothesis import given, strategies as st

from dyadic_zygmund.bases import (
    BetaBasis,
    BetaSequence,
    IndexNotFoundError,
    LatticeBijection,
    ZygmundBasis,
    _tuples_for_scale,
    basis_A_interval,
    beta_concat,
    beta_index_find,
    beta_shell,
    bijection_eval,
    fold,
    is_E_prime,
    lift_extension,
    select_cd,
    tau_inverse,
    tau_map,
    theorem1_basis,
    theorem2_family,
    theorem2_pairs,
)
from dyadic_zygmund.dyadic import AnchoredBox, RootExponent, box_volume, contains_cube, cube
from dyadic_zygmund.extension import verify_monotone

SQ2 = RootExponent(2, 2)


def test_bijection_origin_and_cover():
    assert bijection_eval(LatticeBijection(3), 0) == (0, 0, 0)
    psi = LatticeBijection(3)
    half = (5 ** 3 - 1) // 2
    pts = {psi(m) for m in range(-half, half + 1)}
    assert pts == set(itertools.product(range(-2, 3), repeat=3))


def test_bijection_round_trip():
    for d in (1, 2, 3, 4):
        psi = LatticeBijection(d)
        seen = set()
        for m in range(-1000, 1001):
            p = psi(m)
            assert psi.index(p) == m
            seen.add(p)
        assert len(seen) == 2001


def test_fold_is_zigzag():
    assert [fold(m) for m in (0, 1, -1, 2, -2)] == [0, 1, 2, 3, 4]


@pytest.mark.parametrize("d,n", [(2, 1), (3, 2), (2, 3)])
def test_theorem1_coverage(d, n):
    basis, rep = theorem1_basis(d, n)
    assert rep.ok and not rep.missing and rep.n_targets == (2 * n + 1) ** d
    psi = LatticeBijection(d)
    for m in range(rep.index_range[0], rep.index_range[1] + 1, 7):
        assert tuple(basis.shape((m, -m))) == psi(m)


def test_lift_extension():
    basis, _ = theorem1_basis(2, 1)
    assert lift_extension(basis, 2) == basis
    lifted = lift_extension(basis, 4)
    rng = random.Random(3)
    for _ in range(50):
        a, b, c, e = (rng.randint(-9, 9) for _ in range(4))
        assert lifted.shape((a, b, c, e)) == basis.shape((a, b))
        assert lifted.shape((a, b, c + 1, e)) == lifted.shape((a, b, c, e))


def test_beta_shells_and_prefix():
    assert beta_shell(4, 0) == [(0, 0)]
    assert beta_shell(4, 2) == [(0, 0), (1, -1), (2, -2)]
    assert beta_shell(5, 1) == [(0, 0, 0), (0, 1, -1), (1, 0, -1), (1, 1, -2)]
    assert [beta_concat(4, m) for m in (0, 1, 2, 5)] == [(0, 0), (0, 0), (1, -1), (2, -2)]


def test_beta_concat_d5_shell_boundary():
    assert beta_concat(5, 4) == (1, 1, -2)
    assert beta_concat(5, 5) == (0, 0, 0)


@pytest.mark.parametrize("d", [4, 5, 6])
def test_beta_shell_invariants(d):
    seq = BetaSequence(d)
    flat = []
    for n in range(31 if d < 6 else 12):
        sh = beta_shell(d, n)
        assert len(sh) == (n + 1) ** (d - 3)
        assert all(sum(t) == 0 and all(0 <= x <= n for x in t[:-1]) for t in sh)
        assert seq.shell_start(n) == len(flat)
        flat += sh
    assert [beta_concat(d, m) for m in range(len(flat))] == flat


def test_index_find_examples():
    m = beta_index_find(4, (0, 0), 1, 4)
    assert m.n == 0 and (m.lower, m.upper) == (0, 1)
    m = beta_index_find(4, (1, -1), 2, 2)
    assert m.n == 2 and m.admissible == (2, 4)
    with pytest.raises(IndexNotFoundError):
        beta_index_find(4, (2, -2), 1, 4)


def test_tau_examples():
    assert tau_map(4, "forward", 3) == 9
    assert tau_map(4, "forward", -2) == -4
    assert tau_map(4, "inverse", 2) == SQ2
    assert tau_map(5, "inverse", -8) == -2 and isinstance(tau_map(5, "inverse", -8), int)


def test_basis_A_interval_examples():
    assert basis_A_interval(4, SQ2, -SQ2) == (SQ2, -SQ2, 1, -1)
    assert basis_A_interval(4, -1, 1) == (-1, 1, 0, 0)
    assert basis_A_interval(4, 0, 0) == (0, 0, 0, 0)


def test_is_E_prime_examples():
    assert is_E_prime((SQ2, -SQ2, 1, -1))
    assert not is_E_prime((SQ2, -1, 0, 1))
    assert is_E_prime((0, 0, 0, 0))


def test_beta_basis_extensions_monotone():
    bb = BetaBasis(5, 60)
    assert all(verify_monotone(e, 60).ok for e in bb.extensions)


def test_theorem2_family_small():
    assert theorem2_family(4, 1, 4) == [cube(4, 0)]


@pytest.mark.parametrize("d,k", [(4, 10), (5, 8)])
def test_theorem2_family_invariants(d, k):
    cd = select_cd(d, k)
    fam = theorem2_family(d, k, cd)
    assert len(set(fam)) == len(fam)
    for b in fam:
        assert contains_cube(b, k)
        assert is_E_prime(b.exps)
        assert box_volume(b) == 1


@pytest.mark.parametrize("d,k", [(4, 12), (5, 6)])
def test_family_matches_extension_route(d, k):
    # the Lemma-1 extensions evaluated on the antidiagonal give the same boxes
    cd = select_cd(d, k)
    pairs = theorem2_pairs(d, k, cd)
    bb = BetaBasis(d, max(n for n, _ in pairs))
    for (n, tup), box in zip(pairs, theorem2_family(d, k, cd)):
        s = tau_inverse(d, n)
        assert AnchoredBox(bb.exponents(s, -s)) == box


def test_family_size_counting_oracle():
    # d = 4: scale j admits m_1 in 0..floor(j/C), and tuples repeat across j
    k, cd = 40, 2
    distinct = {m for j in range(1, k + 1) for m in range(j // cd + 1)}
    pairs = theorem2_pairs(4, k, cd)
    assert {tup[0] for _, tup in pairs} == distinct
    # one box per (tuple, index) pair after dedup
    direct = {(beta_index_find(4, t, j, cd, list_all=False).n, t) for j in range(1, k + 1) for t in _tuples_for_scale(4, j, cd)}
    assert len(pairs) == len(direct)


def test_select_cd_values():
    assert select_cd(4, 60) == 2
    assert select_cd(5, 60) == 2


@given(st.integers(4, 6), st.integers(1, 25))
def test_index_bounds_hold(d, j):
    cd = select_cd(d, 25)
    for tup in _tuples_for_scale(d, j, cd):
        m = beta_index_find(d, tup, j, cd, list_all=False)
        assert cd * m.n >= (j - 1) ** (d - 2) and m.n <= j ** (d - 2)
        assert beta_concat(d, m.n) == tup


@given(st.integers(1, 4), st.integers(-5000, 5000))
def test_bijection_round_trip_property(d, m):
    psi = LatticeBijection(d)
    assert psi.index(psi(m)) == m
