import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from levyexp.classify import classify_support
from levyexp.errors import ParameterError
from levyexp.model import brownian, deterministic, poisson, zero_process
from levyexp.simulate import RngStream, killed_functional_batch, unkilled_functional_batch
from levyexp.verify import (FAIL, INCONCLUSIVE, PASS, EmpiricalReport, aggregate, atom_at_zero_test,
                            continuity_threshold, ks_critical, ks_one_sample, ks_statistic,
                            ks_two_sample, lattice_test, max_atom_screen, stationarity_test,
                            summary_table, support_coverage_test)

INTERVAL_0_2 = classify_support(deterministic(1.0), deterministic(2.0), 1.0)
POINT_0 = classify_support(brownian(), zero_process(), 1.0)
LINE = classify_support(brownian(), brownian(), 1.0)


# -- KS ---------------------------------------------------------------------

def test_ks_identical_and_disjoint():
    a = np.linspace(0, 1, 500)
    assert ks_statistic(a, a) == 0.0
    assert ks_statistic(a, a + 10) == 1.0
    assert ks_two_sample(a, a).passed
    assert not ks_two_sample(a, a + 10).passed


def test_ks_statistic_matches_scipy():
    g = np.random.default_rng(1)
    a, b = g.normal(size=700), g.normal(0.1, 1.0, size=900)
    assert ks_statistic(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-15)


def test_ks_critical_shrinks_with_n():
    assert ks_critical(100, 100) > ks_critical(1000, 1000) > ks_critical(10_000, 10_000)
    # asymptotic 1% level: 1.628 sqrt(2/n)
    assert ks_critical(10_000, 10_000) == pytest.approx(1.6276 * math.sqrt(2 / 10_000), rel=1e-3)


def test_ks_exponential_false_rejection_rate():
    passes = 0
    for s in range(40):
        g = np.random.default_rng(s)
        passes += ks_two_sample(g.exponential(size=2000), g.exponential(size=2000)).passed
    assert passes >= 38


def test_ks_one_sample_rejects_wrong_law():
    x = np.random.default_rng(3).exponential(size=5000)
    assert ks_one_sample(x, stats.expon.cdf).passed
    assert not ks_one_sample(x, stats.norm.cdf).passed


# -- support coverage -------------------------------------------------------

def test_uniform_fills_interval():
    v = np.random.default_rng(0).uniform(0, 2, 10_000)
    r = support_coverage_test(v, INTERVAL_0_2)
    assert r.passed and r.diagnostics["coverage"] >= 0.9


def test_half_interval_fails_coverage():
    # mass on both ends keeps the gap (1, 1.9) inside the central quantile range
    g = np.random.default_rng(0)
    v = np.concatenate([g.uniform(0, 1, 9_000), g.uniform(1.9, 2.0, 1_000)])
    r = support_coverage_test(v, INTERVAL_0_2)
    assert r.statistic == 0.0
    assert r.status == FAIL


def test_points_outside_point_support():
    r = support_coverage_test(np.array([0.0, 1.0, 2.0]), POINT_0)
    assert r.statistic == pytest.approx(2 / 3)
    assert not r.passed


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
@settings(max_examples=50, deadline=None)
def test_full_line_never_has_outside_mass(xs):
    r = support_coverage_test(np.array(xs), LINE)
    assert r.statistic == 0.0


def test_empty_batch_rejected():
    with pytest.raises(ParameterError):
        support_coverage_test(np.array([]), LINE)


def test_lattice():
    g = np.random.default_rng(2)
    assert lattice_test(g.poisson(5.0, 20_000).astype(float)).passed
    assert not lattice_test(g.poisson(5.0, 20_000) + 0.5).passed
    assert lattice_test(np.zeros(10)).diagnostics["missing"] == list(range(1, 11))


# -- atoms ------------------------------------------------------------------

def test_atom_absent_for_continuous_law():
    v = np.random.default_rng(0).normal(size=50_000)
    r = atom_at_zero_test(v)
    assert r.status == INCONCLUSIVE
    assert r.statistic == 0.0
    assert atom_at_zero_test(v, expected=0.0).passed


def test_atom_half_zeros():
    g = np.random.default_rng(1)
    v = np.where(g.random(40_000) < 0.5, 0.0, g.exponential(size=40_000))
    assert atom_at_zero_test(v, expected=0.5).passed
    assert not atom_at_zero_test(v, expected=0.4).passed
    # the window search finds the same atom
    assert max_atom_screen(v, 1e-9).statistic == pytest.approx(0.5, abs=0.01)


def test_max_atom_exponential():
    v = np.random.default_rng(4).exponential(size=100_000)
    r = max_atom_screen(v, 1e-3, threshold=continuity_threshold(v.size, 1e-3))
    assert r.statistic < 0.01
    assert r.passed


def test_screen_parameters():
    with pytest.raises(ParameterError):
        max_atom_screen(np.ones(3), 0.0)
    with pytest.raises(ParameterError):
        atom_at_zero_test(np.ones(3), 0.0)
    assert math.isnan(max_atom_screen(np.ones(3)).threshold)


# -- stationarity -----------------------------------------------------------

def test_stationarity_rejects_far_start():
    r = stationarity_test(brownian(), brownian(), 1.0, 0.1, 5000, RngStream(1), x0=np.full(5000, 1e3))
    assert not r.passed


def test_stationarity_trivial_pair():
    r = stationarity_test(brownian(), zero_process(), 1.0, 0.5, 2000, RngStream(1), x0=np.zeros(2000))
    assert r.passed and r.statistic == 0.0


def test_stationarity_needs_positive_time():
    with pytest.raises(ParameterError):
        stationarity_test(brownian(), brownian(), 1.0, 0.0, 10, RngStream(0))


# -- aggregation ------------------------------------------------------------

def _rep(status):
    return EmpiricalReport("s", "t", 0.1, 0.2, status)


def test_aggregate_tolerates_one_failure():
    assert aggregate([_rep(PASS)] * 9 + [_rep(FAIL)]).passed
    assert not aggregate([_rep(PASS)] * 8 + [_rep(FAIL)] * 2).passed
    assert aggregate([_rep(FAIL)] * 2, max_failures=2).passed


def test_summary_table_and_dict():
    r = EmpiricalReport("abc", "ks", 0.5, float("inf"), PASS, {"x": np.float64(1.0)})
    table = summary_table([r])
    assert table.splitlines()[0].split() == ["scenario", "test", "statistic", "threshold", "status"]
    assert "abc" in table and "pass" in table
    d = r.to_dict()
    assert d["threshold"] == "inf" and type(d["diagnostics"]["x"]) is float


# -- unkilled range inside the fattened killed range ------------------------

def test_unkilled_range_inside_killed_support():
    xi, eta = deterministic(1.0), poisson(1.0, 1.0, drift=0.5)
    killed = classify_support(xi, eta, 0.1)
    u = unkilled_functional_batch(xi, eta, 2000, seed=3).values
    k = killed_functional_batch(xi, eta, 0.1, 20_000, seed=4).values
    assert support_coverage_test(u, killed, eps=1e-3).statistic == 0.0
    lo, hi = np.quantile(k, [0.001, 0.999])
    pad = 0.5 * (hi - lo)
    assert lo - pad <= u.min() and u.max() <= hi + pad
