import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from levyexp.errors import HorizonExceeded, ParameterError
from levyexp.model import (Atoms, LevyTriplet, StablePiece, brownian, compound_poisson, deterministic,
                           poisson, sim_recipe, zero_process)
from levyexp.simulate import (RngStream, SimParams, evaluate_killed_path, evaluate_path,
                              fixed_point_residual, fixed_t_batch, fixed_t_functional_sample, gou_step,
                              killed_functional_batch, killed_functional_sample, simulate_path,
                              unkilled_functional_batch, unkilled_functional_sample)
from levyexp.verify import ks_one_sample, ks_two_sample

HALVING = LevyTriplet.from_drift(0.0, (Atoms.of(("log(2)", 1.0)),))


# -- streams ----------------------------------------------------------------

def test_stream_reproducible_and_split():
    a = RngStream(5, (1, 2)).generator.random(4)
    b = RngStream(5, (1, 2)).generator.random(4)
    c = RngStream(5, (1, 3)).generator.random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert RngStream(5).child(3) == RngStream(5, (3,))


def test_params_validation():
    for kw in ({"h": 0}, {"delta": -1}, {"block_size": 0}, {"t0": 10, "max_horizon": 5}, {"tail_tol": 0}):
        with pytest.raises(ParameterError):
            SimParams(**kw)
    assert "workers" not in SimParams(workers=3).provenance()


# -- paths ------------------------------------------------------------------

def test_zero_path():
    p = simulate_path(zero_process(), zero_process(), 2.0, RngStream(1))
    assert p.events() == []
    assert np.all(p.xi_values() == 0)


def test_linear_path():
    p = simulate_path(deterministic(1.0), zero_process(), 0.5, RngStream(1))
    assert p.xi_values()[-1] == 0.5


def test_poisson_jump_count():
    n = 20_000
    root = RngStream(2)
    counts = np.array([len(simulate_path(poisson(), zero_process(), 1.0, root.child(i)).events())
                       for i in range(n)])
    assert abs(counts.mean() - 1.0) <= 3 * math.sqrt(1.0 / n)


def test_path_times_sorted_and_sources_disjoint():
    root = RngStream(3)
    for i in range(200):
        p = simulate_path(poisson(2.0), poisson(3.0, -1.0), 2.0, root.child(i), q=1.0)
        assert np.all(np.diff(p.times) > 0)
        assert not np.any((p.xi_jump != 0) & (p.eta_jump != 0))


def test_bad_horizon():
    with pytest.raises(ParameterError):
        simulate_path(poisson(), poisson(), 0.0, RngStream(0))


# -- killed functional ------------------------------------------------------

def test_identity_case_is_exponential():
    v = killed_functional_batch(zero_process(), deterministic(1.0), 1.0, 100_000, seed=1).values
    assert ks_one_sample(v, stats.expon.cdf).passed


def test_drift_pair_mean_half():
    v = killed_functional_batch(deterministic(1.0), deterministic(1.0), 1.0, 100_000, seed=2).values
    assert v.min() >= 0 and v.max() <= 1
    assert abs(v.mean() - 0.5) <= 4 * v.std() / math.sqrt(v.size)


def test_zero_xi_brownian_eta_moments():
    v = killed_functional_batch(zero_process(), brownian(), 1.0, 100_000, seed=3).values
    se = v.std() / math.sqrt(v.size)
    assert abs(v.mean()) <= 4 * se
    # Var V = E tau = 1; the fourth moment 3 E tau^2 = 6 gives the standard error of the variance
    assert abs(v.var() - 1.0) <= 4 * math.sqrt(5.0 / v.size)


def test_single_sample_matches_distribution():
    root = RngStream(4)
    vals = [killed_functional_sample(zero_process(), deterministic(1.0), 1.0, root.child(i)) for i in range(2000)]
    assert ks_one_sample(np.array(vals), stats.expon.cdf).passed


def test_killing_rate_positive():
    with pytest.raises(ParameterError):
        killed_functional_batch(brownian(), brownian(), 0.0, 10, seed=0)
    with pytest.raises(ParameterError):
        killed_functional_batch(brownian(), brownian(), 1.0, 0, seed=0)


def test_worker_count_does_not_change_values():
    args = (brownian(), poisson(1.0, 0.5, drift=1.0), 1.0, 3000, 7)
    a = killed_functional_batch(*args, params=SimParams(block_size=256, workers=1)).values
    b = killed_functional_batch(*args, params=SimParams(block_size=256, workers=3)).values
    assert a.tobytes() == b.tobytes()


# -- fixed horizon ----------------------------------------------------------

def test_fixed_small_horizon():
    v = fixed_t_batch(deterministic(1.0), poisson(1.0, 1.0, drift=2.0), 1e-6, 5000, seed=1).values
    assert np.all(np.abs(v) < 1e-3)


def test_fixed_zero_xi_is_eta_t():
    eta = compound_poisson((1.0, 1.0), (-0.5, 2.0), drift=0.3)
    v = fixed_t_batch(zero_process(), eta, 1.5, 20_000, seed=2).values
    g = np.random.default_rng(0)
    k1, k2 = g.poisson(1.5, 20_000), g.poisson(3.0, 20_000)
    direct = 0.3 * 1.5 + k1 * 1.0 - 0.5 * k2
    # lattice-valued: round so that equal atoms tie exactly despite different summation order
    assert ks_two_sample(np.round(v, 9), np.round(direct, 9)).passed


def test_fixed_halving_grid():
    # exp(-xi) = 2^-M: values are sums n_k 2^-k
    v = fixed_t_batch(HALVING, poisson(), 1.0, 20_000, seed=3).values
    scaled = v * 2**12
    assert np.all(np.abs(scaled - np.round(scaled)) <= 1e-9 * 2**12)


def test_fixed_single_sample():
    x = fixed_t_functional_sample(deterministic(1.0), deterministic(1.0), 2.0, RngStream(1))
    assert x == pytest.approx(-math.expm1(-2.0), rel=1e-14)


def test_fixed_horizon_positive():
    with pytest.raises(ParameterError):
        fixed_t_batch(brownian(), brownian(), 0.0, 10, seed=0)


# -- GOU step ---------------------------------------------------------------

def test_gou_restart_for_large_rate():
    xi, eta = poisson(1.0, 0.5, drift=1.0), poisson()
    x0 = np.full(20_000, 50.0)
    out = gou_step(x0, xi, eta, 1e3, 1.0, seed=1)
    fresh = killed_functional_batch(xi, eta, 1e3, 20_000, seed=2).values
    assert ks_two_sample(out, fresh).passed


def test_gou_without_restart_is_fixed_horizon_integral():
    xi, eta = deterministic(1.0), brownian()
    out = gou_step(np.zeros(20_000), xi, eta, 1e-12, 0.8, seed=3)
    ref = fixed_t_batch(xi, eta, 0.8, 20_000, seed=4).values
    assert ks_two_sample(out, ref).passed


def test_gou_pure_decay():
    x0 = np.linspace(-3, 3, 11)
    out = gou_step(x0, deterministic(1.0), zero_process(), 1e-12, 0.7, seed=0)
    assert np.allclose(out, np.exp(-0.7) * x0, rtol=1e-14, atol=0)


def test_fixed_point_residual_at_zero_time():
    assert fixed_point_residual(brownian(), brownian(), 1.0, 0.0, 1000, seed=1) == 0.0


# -- unkilled ---------------------------------------------------------------

def test_unkilled_drift_pair():
    b = unkilled_functional_batch(deterministic(1.0), deterministic(1.0), 2000, seed=1,
                                  params=SimParams(tail_tol=1e-6))
    assert np.all(np.abs(b.values - 1.0) <= 1e-6)


def test_unkilled_divergent():
    with pytest.raises(HorizonExceeded):
        unkilled_functional_batch(brownian(1.0, -1.0), deterministic(1.0), 200, seed=1,
                                  params=SimParams(max_horizon=64))


def test_unkilled_single_sample():
    v, bound = unkilled_functional_sample(deterministic(2.0), deterministic(1.0), RngStream(1))
    assert bound <= 1e-6
    assert v == pytest.approx(0.5, abs=1e-6)


# -- scheme consistency -----------------------------------------------------

fv_pairs = st.sampled_from([
    (poisson(1.0, 0.5, drift=1.0), poisson()),
    (compound_poisson((1.0, 1.0), (-0.7, 0.5)), poisson(2.0, -1.0, drift=0.5)),
    (deterministic(-0.5), compound_poisson((2.0, 1.0), (-1.0, 1.0), drift=1.0)),
])


@given(fv_pairs, st.integers(0, 10**6), st.floats(0.2, 3.0))
@settings(max_examples=40, deadline=None)
def test_grid_and_exact_evaluators_agree(pair, seed, horizon):
    xi, eta = pair
    p = simulate_path(xi, eta, horizon, RngStream(seed))
    exact = evaluate_path(p)
    for g in (0.05, 0.3):
        assert evaluate_path(p, grid=g) == pytest.approx(exact, rel=1e-12, abs=1e-12)


@given(fv_pairs, st.integers(0, 10**6), st.floats(0.1, 3.0))
@settings(max_examples=40, deadline=None)
def test_killed_path_matches_cemetery_evaluation(pair, seed, q):
    xi, eta = pair
    p = simulate_path(xi, eta, 6.0, RngStream(seed), q=q)
    upper = min(p.tau, p.horizon)
    assert evaluate_killed_path(p) == pytest.approx(evaluate_path(p, upper=upper), rel=1e-12, abs=1e-12)


def test_force_grid_batch_matches_exact_batch():
    xi, eta = poisson(1.0, 0.5, drift=1.0), poisson(2.0, -1.0, drift=0.5)
    a = killed_functional_batch(xi, eta, 1.0, 2000, seed=5).values
    b = killed_functional_batch(xi, eta, 1.0, 2000, seed=5, params=SimParams(force_grid=True)).values
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_small_jump_refinement():
    eta = LevyTriplet(0.0, (StablePiece(1.5, 1.0, 0.3),), 0.2)
    xi = deterministic(1.0)
    means, ses = [], []
    for delta in (0.05, 0.025):
        v = fixed_t_batch(xi, eta, 1.0, 20_000, seed=6, params=SimParams(delta=delta)).values
        means.append(v.mean())
        ses.append(v.std() / math.sqrt(v.size))
    declared = sim_recipe(eta, 0.05).truncation_error
    assert abs(means[0] - means[1]) <= math.sqrt(declared) + 4 * math.hypot(*ses)
