import math
import warnings

import numpy as np
import pytest

from gmrf_fmp import (
    ModelValueError,
    NotPositiveDefiniteError,
    dense_oracle,
    diagnose,
    error_bounds,
    mean_error,
    row_sum_bounds,
    spectral_radius_abs,
    truncated_walk_sum,
    validate,
    variance_error,
)
from helpers import (
    model_from_dense,
    numpy_solution,
    pd_model_from_structure,
    random_pairs,
    unit_model,
)

C3 = unit_model(3, [(0, 1, -0.3), (0, 2, -0.3), (1, 2, -0.3)], h=[1, 1, 1])


def test_dense_oracle_examples():
    ident = unit_model(2, [], h=[3.0, -1.0])
    sol = dense_oracle(ident)
    assert np.array_equal(sol.variances, [1.0, 1.0])
    assert np.array_equal(sol.means, [3.0, -1.0])

    chain = unit_model(2, [(0, 1, -0.5)], h=[1.0, 0.0])
    sol = dense_oracle(chain)
    assert sol.variances == pytest.approx([4 / 3, 4 / 3], abs=1e-12)
    assert sol.means == pytest.approx([4 / 3, 2 / 3], abs=1e-12)

    sol = dense_oracle(C3)
    assert sol.variances == pytest.approx(np.full(3, 35 / 26), abs=1e-12)
    off = sol.full_cov[0, 1]
    assert off == pytest.approx(15 / 26, abs=1e-12)


def test_dense_oracle_matches_numpy_on_random_models():
    rng = np.random.default_rng(107)
    for _ in range(15):
        n = int(rng.integers(2, 40))
        m = pd_model_from_structure(rng, n, random_pairs(rng, n, 0.3), delta=0.3)
        sol = dense_oracle(m)
        means, variances, cov = numpy_solution(m)
        assert np.max(np.abs(sol.means - means)) < 1e-10
        assert np.max(np.abs(sol.variances - variances)) < 1e-10
        assert np.max(np.abs(sol.full_cov - cov)) < 1e-10
        assert np.array_equal(sol.full_cov, sol.full_cov.T)


def test_dense_oracle_rejects_indefinite():
    bad = unit_model(2, [(0, 1, 1.5)])
    with pytest.raises(NotPositiveDefiniteError, match="order"):
        dense_oracle(bad)


def test_dense_oracle_cov_limit():
    m = unit_model(3, [(0, 1, 0.2)])
    assert dense_oracle(m, cov_limit=2).full_cov is None
    assert dense_oracle(m, cov_limit=3).full_cov is not None


def test_validate_accepts_pd_and_rejects_indefinite():
    validate(C3)
    bad = unit_model(2, [(0, 1, 1.5)])
    with pytest.raises(NotPositiveDefiniteError):
        validate(bad)
    # iterative path for models past the dense cutoff
    rng = np.random.default_rng(109)
    big = pd_model_from_structure(rng, 30, random_pairs(rng, 30, 0.1), delta=0.3)
    validate(big, dense_limit=10)
    with pytest.raises(NotPositiveDefiniteError):
        validate(unit_model(20, [(i, i + 1, 0.9) for i in range(19)]), dense_limit=10)


def test_spectral_radius_examples():
    assert spectral_radius_abs(unit_model(3, [])) == 0.0
    chain = unit_model(2, [(0, 1, 0.5)])
    assert spectral_radius_abs(chain) == pytest.approx(0.5, rel=1e-7)
    assert spectral_radius_abs(C3) == pytest.approx(0.6, rel=1e-7)
    star = unit_model(4, [(0, 1, 0.2), (0, 2, -0.2), (0, 3, 0.2)])
    assert spectral_radius_abs(star) == pytest.approx(0.2 * math.sqrt(3), rel=1e-7)


def test_spectral_radius_matches_dense_eigensolve():
    rng = np.random.default_rng(113)
    for _ in range(20):
        n = int(rng.integers(2, 35))
        m = pd_model_from_structure(rng, n, random_pairs(rng, n, 0.25), delta=0.1)
        r_bar = np.abs(m.to_dense() - np.eye(n))
        expected = np.max(np.abs(np.linalg.eigvals(r_bar)))
        assert spectral_radius_abs(m, tol=1e-10) == pytest.approx(expected, rel=1e-7, abs=1e-9)


def test_spectral_radius_takes_max_over_components():
    m = unit_model(6, [(0, 1, 0.3), (2, 3, 0.7), (4, 5, 0.1)])
    assert spectral_radius_abs(m) == pytest.approx(0.7, rel=1e-7)


def test_row_sum_bounds_examples():
    assert row_sum_bounds(C3) == (pytest.approx(0.6), pytest.approx(0.6))
    star = unit_model(4, [(0, 1, 0.2), (0, 2, 0.2), (0, 3, 0.2)])
    lo, hi = row_sum_bounds(star)
    assert (lo, hi) == (pytest.approx(0.2), pytest.approx(0.6))
    assert lo <= spectral_radius_abs(star) <= hi
    assert row_sum_bounds(unit_model(2, [])) == (0.0, 0.0)


def test_row_sum_bounds_bracket_spectral_radius():
    rng = np.random.default_rng(127)
    for _ in range(20):
        n = int(rng.integers(2, 30))
        m = pd_model_from_structure(rng, n, random_pairs(rng, n, 0.3), delta=0.2)
        lo, hi = row_sum_bounds(m)
        rho = spectral_radius_abs(m)
        assert lo - 1e-9 <= rho <= hi + 1e-9


def test_error_bounds_examples():
    lbp_bound, fmp_bound = error_bounds(C3)
    assert lbp_bound == pytest.approx(0.6**3 / 0.4, abs=1e-12)
    assert fmp_bound == pytest.approx(lbp_bound, abs=1e-12)  # k = 0 case

    _, fmp_bound = error_bounds(C3, pseudo_fvs=(0,))
    assert fmp_bound == 0.0  # forest remainder

    hot = unit_model(3, [(0, 1, 0.6), (0, 2, 0.6), (1, 2, 0.6)])
    lbp_bound, _ = error_bounds(hot)
    assert math.isinf(lbp_bound)

    forest = unit_model(3, [(0, 1, 0.4), (1, 2, 0.4)])
    lbp_bound, fmp_bound = error_bounds(forest)
    assert lbp_bound == 0.0 and fmp_bound == 0.0


def test_error_bounds_remainder_scale():
    # 5 nodes, remove 1: scale (n-k)/n = 4/5 against the remainder's rho, girth
    m = unit_model(
        5, [(0, 1, 0.3), (1, 2, 0.3), (0, 2, 0.3), (2, 3, 0.3), (3, 4, 0.3), (2, 4, 0.3)]
    )
    _, fmp_bound = error_bounds(m, pseudo_fvs=(0,))
    rem = unit_model(4, [(0, 1, 0.3), (1, 2, 0.3), (2, 3, 0.3), (1, 3, 0.3)])
    rho = spectral_radius_abs(rem)
    assert fmp_bound == pytest.approx(0.8 * rho**3 / (1 - rho), rel=1e-6)


def test_variance_and_mean_error_metric():
    assert variance_error(np.ones(4), np.ones(4)) == 0.0
    assert variance_error(np.full(7, 1.1), np.ones(7)) == pytest.approx(0.1)
    assert variance_error(np.array([1.0, 1.2]), np.array([1.1, 1.0])) == pytest.approx(0.15)
    assert mean_error(np.array([1.0, 1.2]), np.array([1.1, 1.0])) == pytest.approx(0.15)
    with pytest.raises(ModelValueError):
        variance_error(np.ones(3), np.ones(4))


def test_truncated_walk_sum_examples():
    assert truncated_walk_sum(C3, 0, 0, 2) == pytest.approx(1.18, abs=1e-12)
    assert truncated_walk_sum(C3, 0, 0, 3) == pytest.approx(1.234, abs=1e-12)
    assert truncated_walk_sum(C3, 0, 1, 0) == 0.0
    assert truncated_walk_sum(C3, 0, 0, 0) == 1.0
    assert truncated_walk_sum(C3, 0, 1, 1) == pytest.approx(0.3, abs=1e-12)


def test_truncated_walk_sum_neumann_convergence():
    rng = np.random.default_rng(131)
    models = [C3]
    while len(models) < 6:
        n = int(rng.integers(3, 11))
        m = pd_model_from_structure(rng, n, random_pairs(rng, n, 0.4), delta=0.3)
        if spectral_radius_abs(m) < 0.9:
            models.append(m)
    for m in models:
        _, _, cov = numpy_solution(m)
        rho = spectral_radius_abs(m)
        for max_len in (0, 3, 10, 25, 60):
            slack = rho ** (max_len + 1) / (1 - rho)
            for i in range(m.n):
                for j in range(m.n):
                    got = truncated_walk_sum(m, i, j, max_len)
                    assert abs(got - cov[i, j]) <= slack + 1e-12


def test_diagnose_reports():
    report = diagnose(C3)
    assert report.n == 3 and report.m == 3
    assert report.girth == 3
    assert report.walk_summable
    assert report.rho_bar == pytest.approx(0.6, rel=1e-7)
    assert report.rho_lower <= report.rho_bar + 1e-9
    assert report.rho_bar <= report.rho_upper + 1e-9
    assert report.lbp_error_bound == pytest.approx(0.54, rel=1e-6)

    d = report.to_json_dict()
    assert d["girth"] == 3
    assert d["walk_summable"] is True

    forest = unit_model(3, [(0, 1, 0.4), (1, 2, 0.4)])
    report = diagnose(forest)
    assert report.girth == math.inf
    assert report.lbp_error_bound == 0.0
    assert report.to_json_dict()["girth"] is None


def test_diagnose_non_walk_summable():
    hot = unit_model(3, [(0, 1, 0.6), (0, 2, 0.6), (1, 2, 0.6)])
    report = diagnose(hot)
    assert not report.walk_summable
    assert math.isinf(report.lbp_error_bound)
    assert report.to_json_dict()["lbp_error_bound"] is None


def test_submodel_spectral_radius_interlacing():
    rng = np.random.default_rng(137)
    from gmrf_fmp import extract_submodel

    for _ in range(10):
        n = int(rng.integers(5, 25))
        m = pd_model_from_structure(rng, n, random_pairs(rng, n, 0.3), delta=0.1)
        full = spectral_radius_abs(m, tol=1e-9)
        drop = list(rng.choice(n, size=int(rng.integers(1, n - 1)), replace=False))
        sub = extract_submodel(m, drop).j_sub
        assert spectral_radius_abs(sub, tol=1e-9) <= full + 2e-9


def test_spectral_radius_warns_at_iteration_cap():
    chain = unit_model(6, [(i, i + 1, 0.5) for i in range(5)])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        spectral_radius_abs(chain, tol=1e-15, max_iterations=3)
    assert any("power iteration" in str(w.message) for w in caught)
