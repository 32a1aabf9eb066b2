import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levyexp.calculus import (CharExponent, IntegrandFunction, Verdict, char_exponent, check_acp,
                              check_hartman_wintner, check_hawkes, check_kallenberg,
                              convergence_helper, transform_exponent, transform_triplet)
from levyexp.model import (INF, Atoms, AtomSequence, DensityPiece, LevyTriplet, StablePiece, brownian,
                           compound_poisson, deterministic, poisson, profile, spec, zero_process)
from levyexp.simulate import RngStream, simulate_path

UNIT_POISSON = LevyTriplet(0.0, (Atoms.of((1.0, 1.0)),), 1.0)


# -- characteristic exponent ------------------------------------------------

def test_brownian_exponent():
    assert char_exponent(brownian(), 2.0) == pytest.approx(-2.0 + 0j)


@pytest.mark.parametrize("z", [0.3, 1.0, -2.5, 7.0])
def test_poisson_exponent(z):
    assert char_exponent(UNIT_POISSON, z) == pytest.approx(cmath.exp(1j * z) - 1, abs=1e-14)


def test_poisson_exponent_against_empirical_cf():
    # eta_1 sampled through the path simulator; the empirical cf matches exp(Psi(z))
    vals = []
    root = RngStream(11)
    for i in range(5_000):
        p = simulate_path(poisson(), deterministic(0.0), 1.0, root.child(i))
        vals.append(p.xi_values()[-1])
    vals = np.array(vals)
    for z in (0.5, 1.3):
        emp = np.mean(np.exp(1j * z * vals))
        assert abs(emp - cmath.exp(char_exponent(poisson(), z))) < 4 / math.sqrt(vals.size)


triplets = st.one_of(
    st.builds(lambda s, g: brownian(s, g), st.floats(0.01, 3), st.floats(-2, 2)),
    st.builds(lambda x, m, d: poisson(m, x, d), st.floats(-3, 3).filter(lambda x: abs(x) > 0.01),
              st.floats(0.1, 3), st.floats(-2, 2)),
    st.builds(lambda a, cp, cm, g: LevyTriplet(0.0, (StablePiece(a, cp, cm),), g),
              st.floats(0.2, 1.8), st.floats(0.1, 2), st.floats(0.1, 2), st.floats(-1, 1)),
    st.builds(lambda a, w, c, s, g: LevyTriplet(0.0, (DensityPiece(a, a + w, c) if s else
                                                       DensityPiece(-a - w, -a, c),), g),
              st.floats(0, 2), st.floats(0.1, 2), st.floats(0.1, 2), st.booleans(), st.floats(-1, 1)),
)


@given(triplets, st.floats(-50, 50))
@settings(max_examples=80, deadline=None)
def test_exponent_invariants(t, z):
    assert char_exponent(t, 0.0) == 0
    psi = char_exponent(t, z)
    assert psi.real <= 1e-9 * (1 + abs(psi))
    assert char_exponent(t, -z) == pytest.approx(psi.conjugate(), rel=1e-8, abs=1e-10)


# -- transform of triplets --------------------------------------------------

def test_constant_one_is_identity():
    for eta in (brownian(2.0, 0.5), UNIT_POISSON, compound_poisson((2.0, 1.0), (-0.3, 2.0), drift=1.0)):
        out = transform_triplet(IntegrandFunction.constant(1.0, 1.0), 1.0, eta)
        assert (out.sigma2, out.gamma) == (eta.sigma2, eta.gamma)
        assert out.nu_mass(-INF, INF) == eta.nu_mass(-INF, INF)


def test_constant_one_scales_with_t():
    eta = compound_poisson((2.0, 1.0), (-0.3, 2.0), drift=1.0)
    out = transform_triplet(IntegrandFunction.constant(1.0, 2.5), 2.5, eta)
    assert out.gamma == pytest.approx(2.5 * eta.gamma)
    assert out.nu_mass(1.5, 2.5) == pytest.approx(2.5)


def test_doubling_unit_poisson():
    out = transform_triplet(IntegrandFunction.constant(2.0, 1.0), 1.0, UNIT_POISSON)
    assert out.sigma2 == 0
    assert out.gamma == pytest.approx(0.0, abs=1e-15)
    assert out.nu_mass(2.0, 2.0) == pytest.approx(1.0)
    assert out.nu_total() == pytest.approx(1.0)


def test_exponential_integrand_on_unit_drift():
    out = transform_triplet(IntegrandFunction.exponential(1.0, 1.0), INF, deterministic(1.0))
    assert (out.sigma2, out.nu_total()) == (0.0, 0.0)
    assert out.gamma == pytest.approx(1.0)


def test_transform_exponent_examples():
    psi = transform_exponent(IntegrandFunction.constant(2.0, 1.0), 1.0, UNIT_POISSON)
    assert abs(psi(math.pi)) < 1e-12
    psi = transform_exponent(IntegrandFunction.exponential(1.0, 1.0), INF, brownian())
    for z in (0.5, 2.0, 5.0):
        assert psi(z) == pytest.approx(-z * z / 4, rel=1e-8)
    eta = compound_poisson((1.5, 1.0), drift=0.2)
    psi = transform_exponent(IntegrandFunction.constant(1.0, 3.0), 3.0, eta)
    assert psi(1.1) == pytest.approx(3 * char_exponent(eta, 1.1), rel=1e-9)


steps = st.integers(1, 4).flatmap(lambda k: st.tuples(
    st.lists(st.floats(0.05, 1.0), min_size=k, max_size=k),
    st.lists(st.floats(-3, 3), min_size=k, max_size=k)))


def _step(widths, values):
    knots = np.concatenate([[0.0], np.cumsum(widths)])
    return IntegrandFunction.step(knots.tolist(), values), float(knots[-1])


@given(steps, st.lists(st.tuples(st.floats(-3, 3).filter(lambda x: abs(x) > 0.01), st.floats(0.1, 2)),
                       min_size=1, max_size=3, unique_by=lambda a: round(a[0], 6)),
       st.floats(-1, 1))
@settings(max_examples=60, deadline=None)
def test_total_mass_and_drift_under_steps(step, atoms, drift):
    f, t = _step(*step)
    eta = LevyTriplet.from_drift(drift, (Atoms(tuple(atoms)),))
    out = transform_triplet(f, t, eta)
    assert out.nu_total() == pytest.approx(f.nonzero_measure() * eta.nu_total(), rel=1e-12, abs=1e-12)
    assert out.finite_variation
    assert profile(out).drift == pytest.approx(drift * f.integral(), rel=1e-9, abs=1e-12)


@given(steps, st.floats(0.1, 3), st.floats(-1, 1), st.floats(-8, 8))
@settings(max_examples=40, deadline=None)
def test_exponent_consistency(step, sigma2, gamma, z):
    f, t = _step(*step)
    eta = LevyTriplet(sigma2, (Atoms.of((0.7, 1.0), (-1.6, 0.5)),), gamma)
    lhs = transform_exponent(f, t, eta)(z)
    rhs = char_exponent(transform_triplet(f, t, eta), z)
    assert lhs == pytest.approx(rhs, rel=1e-6, abs=1e-9)


def test_stable_image_under_exponential_is_tabulated():
    eta = LevyTriplet(0.0, (StablePiece(1.5, 1.0, 1.0),), 0.0)
    f = IntegrandFunction.exponential(1.0, 1.0, 2.0)
    out = transform_triplet(f, 2.0, eta)
    psi = transform_exponent(f, 2.0, eta)
    for z in (0.5, 3.0):
        assert char_exponent(out, z) == pytest.approx(psi(z), rel=1e-3)


# -- condition checkers -----------------------------------------------------

@pytest.mark.parametrize("th", ["infinite", "positive", ("quarter_over", 0.5)])
def test_kallenberg_gaussian(th):
    from levyexp.calculus import Threshold
    th = Threshold(*th) if isinstance(th, tuple) else th
    r = check_kallenberg(brownian(), th)
    assert r.verdict is Verdict.HOLDS and r.method == "symbolic"


def test_kallenberg_examples():
    assert check_kallenberg(compound_poisson((1.0, 1.0))).verdict is Verdict.FAILS
    assert check_kallenberg(LevyTriplet(0.0, (StablePiece(1.2, 1.0, 1.0),), 0.0)).verdict is Verdict.HOLDS


def test_hartman_wintner_examples():
    assert check_hartman_wintner(brownian()).verdict is Verdict.HOLDS
    assert check_hartman_wintner(compound_poisson((1.0, 1.0)), "positive").verdict is Verdict.FAILS
    assert check_hartman_wintner(poisson(1.0, 1.0, drift=1.0), "positive").verdict is Verdict.FAILS


def test_hartman_wintner_numeric_exponent():
    from levyexp.calculus import Threshold
    log_growth = CharExponent(lambda z: -2.0 * math.log1p(abs(z)))
    r = check_hartman_wintner(log_growth, Threshold("half_over", 1.0))
    assert (r.verdict, r.method) == (Verdict.HOLDS, "numeric")
    assert r.evidence["estimate"] == pytest.approx(2.0)
    assert check_hartman_wintner(log_growth, Threshold("half_over", 0.2)).verdict is Verdict.FAILS
    # a ratio that keeps growing never stabilises on a finite grid
    assert check_hartman_wintner(CharExponent(lambda z: -abs(z) ** 1.5)).verdict is Verdict.UNKNOWN


def test_hawkes_examples():
    assert check_hawkes(brownian()).verdict is Verdict.HOLDS
    assert check_hawkes(compound_poisson((1.0, 1.0))).verdict is Verdict.FAILS
    assert check_hawkes(poisson(1.0, 1.0, drift=1.0)).verdict is Verdict.HOLDS
    assert check_hawkes(deterministic(0.0)).verdict is Verdict.FAILS
    assert check_hawkes(LevyTriplet(0.0, (StablePiece(1.5, 1.0, 1.0),), 0.0)).verdict is Verdict.HOLDS


def test_acp_examples():
    assert check_acp(brownian()).verdict is Verdict.HOLDS
    assert check_acp(poisson()).verdict is Verdict.FAILS
    half_stable = LevyTriplet(0.0, (StablePiece(0.5, 1.0, 0.0),), 2.0)
    assert check_acp(spec(half_stable, "ACP_holds")).verdict is Verdict.HOLDS
    assert check_acp(zero_process()).verdict is Verdict.FAILS
    assert check_acp(spec(LevyTriplet.from_drift(0.0, (AtomSequence(2.0, 3.0, 0.5),)),
                          "potential_measure_singular")).verdict is Verdict.FAILS


def test_convergence_helper():
    assert check_kallenberg(zero_process()).verdict is Verdict.FAILS
    assert convergence_helper(deterministic(1.0), brownian()).verdict is Verdict.HOLDS
    assert convergence_helper(deterministic(-1.0), brownian()).verdict is Verdict.UNKNOWN


@given(triplets)
@settings(max_examples=40, deadline=None)
def test_kallenberg_implies_hartman_wintner(t):
    if check_kallenberg(t).verdict is Verdict.HOLDS:
        assert check_hartman_wintner(t).verdict is not Verdict.FAILS


@given(st.floats(-3, 3), st.lists(st.tuples(st.floats(-3, 3).filter(lambda x: abs(x) > 0.01),
                                            st.floats(0.1, 2)),
                                  max_size=3, unique_by=lambda a: round(a[0], 6)))
@settings(max_examples=40, deadline=None)
def test_hawkes_finite_variation_rule(drift, atoms):
    t = LevyTriplet.from_drift(drift, (Atoms(tuple(atoms)),) if atoms else ())
    r = check_hawkes(t)
    assert r.method == "symbolic"
    assert (r.verdict is Verdict.HOLDS) == (drift != 0)
