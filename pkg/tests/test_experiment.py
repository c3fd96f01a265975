import json
import math
from fractions import Fraction

import pytest

from dyadic_zygmund.experiment import (
    DegenerateFitError,
    ExperimentConfig,
    check_beta_prefix,
    check_index_bounds,
    fit_loglog_slope,
    lowerbound_row,
    mutated_shells,
    parse_alpha_list,
    run_lowerbound,
    run_suite,
)


def test_fit_exact_power_laws():
    f = fit_loglog_slope([(x, x**2) for x in (1, 2, 3, 5, 8)])
    assert f.slope == pytest.approx(2, abs=1e-12) and f.residual < 1e-12 and f.n_points == 5
    g = fit_loglog_slope([(x, 5 * x**3) for x in range(1, 10)])
    assert g.slope == pytest.approx(3, abs=1e-12)
    assert math.exp(g.intercept) == pytest.approx(5, rel=1e-12)


def test_fit_noisy_power_law():
    pts = [(x, x**2 * (1 + 0.1 * math.sin(x))) for x in range(10, 200, 7)]
    f = fit_loglog_slope(pts)
    assert abs(f.slope - 2) < 0.1
    assert 0 < f.residual < 0.2


def test_fit_errors():
    with pytest.raises(ValueError):
        fit_loglog_slope([(1, 1), (2, 4)])
    with pytest.raises(DegenerateFitError):
        fit_loglog_slope([(3, 1), (3, 2), (3, 3)])
    with pytest.raises(ValueError):
        fit_loglog_slope([(1, 1), (2, 0), (3, 9)])
    with pytest.raises(ValueError):
        fit_loglog_slope([(3, 1), (2, 4), (1, 9)])


def test_config_validation_and_k_grid():
    assert ExperimentConfig().k_values == list(range(50, 401, 25))
    assert ExperimentConfig(kmin=20, kmax=101, kstep=5).k_values[-2:] == [100, 101]
    assert ExperimentConfig(alphas="1, 3/2").alphas == (Fraction(1), Fraction(3, 2))
    for bad in ({"precision": 53}, {"cd": 1}, {"kmin": 5, "kmax": 4}, {"kstep": 0}, {"alphas": "-1"}):
        with pytest.raises(ValueError):
            ExperimentConfig(**bad)
    assert parse_alpha_list("0,1,2") == (0, 1, 2)


def test_lowerbound_single_box():
    # C = 4 at k = 1 leaves only the box with beta index 0
    cfg = ExperimentConfig(kmin=1, kmax=1, cd=4, alphas=(0, 1))
    rep = run_lowerbound(cfg)
    (row,) = rep.rows
    assert row.family_size == 1 and row.union == 1 and row.union_error == 0
    assert row.ratio["0"] == row.union and row.c_min == 1
    assert row.rhs["1"] == pytest.approx(math.log(math.e + 16))
    assert rep.summary["union_slope"] is None


def test_lowerbound_rows_invariants(tmp_path):
    cfg = ExperimentConfig(kmin=5, kmax=30, kstep=5, alphas=(0, 1, 2), out=str(tmp_path / "r.csv"), summary=str(tmp_path / "s.json"))
    seen = []
    rep = run_lowerbound(cfg, progress=seen.append)
    assert seen == rep.rows
    ratios0 = [r.ratio["0"] for r in rep.rows]
    assert all(a < b for a, b in zip(ratios0, ratios0[1:]))
    for r in rep.rows:
        assert 1 <= r.union <= r.sum_volumes
        assert 0 < r.c_min <= 1
        assert r.union_error <= 1e-12 * r.union
        assert r.ratio["0"] >= r.ratio["1"] >= r.ratio["2"]
    csv_lines = (tmp_path / "r.csv").read_text().splitlines()
    assert csv_lines[0] == "k,family_size,union,union_error,sum_volumes,c_min,rhs_alpha_0,rhs_alpha_1,rhs_alpha_2,ratio_alpha_0,ratio_alpha_1,ratio_alpha_2"
    assert len(csv_lines) == 7
    assert (tmp_path / "r.csv").read_text() == rep.csv_text()
    summary = json.loads((tmp_path / "s.json").read_text())
    assert summary["fit_window"] == [20, 30] and summary["cd"] == 2
    assert set(summary["ratio_slopes"]) == {"0", "1", "2"}


def test_lowerbound_rejects_low_dimension():
    with pytest.raises(ValueError):
        run_lowerbound(ExperimentConfig(dim=3, kmin=1, kmax=2))


def test_lowerbound_row_direct():
    row = lowerbound_row(5, 10, 2, (Fraction(3),), 64)
    assert row.k == 10 and row.family_size > 1
    assert row.ratio["3"] == pytest.approx(row.union / row.rhs["3"], rel=1e-15)


def test_index_bounds_check_and_mutation():
    res = check_index_bounds(jmax=30)
    assert res.passed
    for d in ("d4", "d5"):
        assert res.detail[d]["cd"] == 2 and res.detail[d]["smaller_cd_fails"] and not res.detail[d]["bad"]
    assert not check_beta_prefix(mutated_shells(0)).passed
    assert check_beta_prefix().passed


def test_suite_default_passes_and_is_deterministic():
    a = run_suite(ExperimentConfig())
    assert a.passed, a.to_json()
    assert a.to_json() == run_suite(ExperimentConfig()).to_json()
    names = [c.name for c in a.checks]
    assert "oracle_equivalence" in names and "exact_averages" in names


def test_suite_mutation_fails_beta_only():
    rep = run_suite(ExperimentConfig(mutate_beta=True, oracle_trials=20))
    failed = [c.name for c in rep.checks if not c.passed]
    assert failed == ["beta_prefix"]
