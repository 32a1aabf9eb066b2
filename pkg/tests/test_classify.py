import math

import pytest
from hypothesis import given, settings, strategies as st

from levyexp.calculus import IntegrandFunction
from levyexp.classify import (StopRule, Tri, classify_ac_unkilled, classify_continuity_killed,
                              classify_deterministic_integrand, classify_fixed_t, classify_support,
                              support_jump_restriction_pairs, support_subset, unkilled_support)
from levyexp.errors import PreconditionViolation
from levyexp.model import (Atoms, AtomSequence, DensityPiece, LevyTriplet, StablePiece, brownian,
                           compound_poisson, deterministic, poisson, profile, spec, zero_process)

HALF_STABLE = LevyTriplet(0.0, (StablePiece(0.5, 1.0, 0.0),), 2.0)
SINGULAR_SUB = LevyTriplet.from_drift(0.0, (AtomSequence(2.0, 3.0, 0.5),))


def _clauses(obj):
    return [t.clause for t in obj.trail]


# -- support ----------------------------------------------------------------

def test_eta_zero_gives_point():
    d = classify_support(brownian(), zero_process(), 1.0)
    assert (d.shape, d.params, d.relation) == ("Point", {"at": 0.0}, "Equal")
    assert _clauses(d)[-1] == "support.i"


def test_subordinator_drift_gives_interval():
    d = classify_support(deterministic(1.0), deterministic(2.0), 1.0)
    assert d.shape == "ClosedInterval"
    assert (d.params["lo"], d.params["hi"]) == (0.0, 2.0)
    assert "support.ii" in _clauses(d)


@pytest.mark.parametrize("xi", [zero_process(), brownian(), poisson(), deterministic(-3.0), HALF_STABLE])
def test_infinite_variation_eta_gives_line(xi):
    d = classify_support(xi, brownian(), 2.0)
    assert d.shape == "FullLine" and d.relation == "Equal"
    assert "support.iii.a" in _clauses(d)


def test_halving_lattice():
    xi = LevyTriplet.from_drift(0.0, (Atoms.of(("-log(2)", 1.0)),))
    d = classify_support(xi, poisson(), 1.0)
    assert d.shape == "SemigroupClosure"
    cs = d.to_closed_set((-0.5, 12.5), depth=16)
    for k in range(13):
        assert cs.contains(float(k), 1e-9)
    assert not cs.contains(0.5, 1e-3)
    assert not cs.intervals


def test_irrational_ratio_gives_line():
    eta = LevyTriplet.from_drift(0.0, (Atoms.of((-1, 1.0), ("sqrt(2)", 1.0)),))
    d = classify_support(poisson(), eta, 1.0)
    assert d.shape == "FullLine"


def test_negative_drift_is_mirror():
    d = classify_support(deterministic(1.0), deterministic(-2.0), 1.0)
    assert d.shape == "ClosedInterval"
    assert (d.params["lo"], d.params["hi"]) == (-2.0, 0.0)


# -- killed continuity ------------------------------------------------------

def test_bm_bm_ac_via_i():
    v = classify_continuity_killed(brownian(), brownian(), 1.0)
    assert v.absolutely_continuous is Tri.YES
    assert "killed_ac.i" in _clauses(v)


@pytest.mark.parametrize("xi", [brownian(), poisson(), zero_process(), deterministic(1.0)])
def test_cpp_eta_has_atom(xi):
    v = classify_continuity_killed(xi, compound_poisson((1.0, 1.0), (-0.5, 2.0)), 1.0)
    assert (v.atom_at_zero, v.continuous, v.absolutely_continuous) == (Tri.YES, Tri.NO, Tri.NO)


def test_cpp_xi_acp_eta():
    # the half-stable subordinator already meets the small-ball growth condition,
    # so the earlier clause wins the fixed order
    v = classify_continuity_killed(poisson(), spec(HALF_STABLE, "ACP_holds"), 1.0)
    assert v.absolutely_continuous is Tri.YES
    assert "killed_ac.i" in _clauses(v)
    v = classify_continuity_killed(poisson(), spec(SINGULAR_SUB, "ACP_holds"), 1.0)
    assert v.absolutely_continuous is Tri.YES
    assert "killed_ac.vi" in _clauses(v)


def test_zero_xi_singular_eta():
    v = classify_continuity_killed(zero_process(), spec(SINGULAR_SUB, "potential_measure_singular"), 1.0)
    assert (v.continuous, v.absolutely_continuous) == (Tri.YES, Tri.NO)


# -- unkilled ---------------------------------------------------------------

def test_unkilled_spectrally_negative_xi():
    xi = spec(brownian(1.0, 1.0), "unkilled_integral_converges")
    v = classify_ac_unkilled(xi, poisson())
    assert v.absolutely_continuous is Tri.YES
    assert "unkilled_ac.viii" in _clauses(v)


def test_unkilled_cpp_pair_undecided():
    xi = spec(poisson(), "unkilled_integral_converges")
    v = classify_ac_unkilled(xi, poisson(1.0, 2.0))
    assert v.absolutely_continuous is Tri.UNKNOWN
    assert v.continuous is Tri.YES


def test_unkilled_gaussian_xi():
    xi = spec(LevyTriplet(1.0, (Atoms.of((1.0, 1.0)),), 1.0), "unkilled_integral_converges")
    assert classify_ac_unkilled(xi, poisson(1.0, -1.0)).absolutely_continuous is Tri.YES


def test_unkilled_needs_convergence_flag():
    with pytest.raises(PreconditionViolation):
        classify_ac_unkilled(deterministic(1.0), brownian())


def test_unkilled_support_inside_killed_support():
    inner = unkilled_support(deterministic(2.0), deterministic(3.0))
    assert (inner.shape, inner.params["at"]) == ("Point", 1.5)
    for q in (0.1, 1.0, 10.0):
        assert support_subset(inner, classify_support(deterministic(2.0), deterministic(3.0), q))


# -- fixed horizon ----------------------------------------------------------

def test_fixed_t_gaussian_xi_fv_eta():
    v = classify_fixed_t(brownian(), poisson(1.0, 1.0, drift=1.0), 1.0)
    assert v.absolutely_continuous is Tri.YES
    assert "fixed_t_ac.v" in _clauses(v)


def test_fixed_t_finite_pair_with_drift_has_atom():
    v = classify_fixed_t(poisson(), poisson(1.0, 1.0, drift=1.0), 1.0)
    assert v.continuous is Tri.NO


def test_fixed_t_brownian_eta():
    v = classify_fixed_t(poisson(), brownian(), 0.5)
    assert v.absolutely_continuous is Tri.YES


# -- deterministic integrands -----------------------------------------------

def test_integrand_brownian():
    v = classify_deterministic_integrand(IntegrandFunction.constant(1.0, 1.0), brownian(), StopRule("fixed", 1.0))
    assert v.absolutely_continuous is Tri.YES
    assert "integrand_ac.i" in _clauses(v)


def test_integrand_poisson_not_continuous():
    v = classify_deterministic_integrand(IntegrandFunction.constant(1.0, 1.0), poisson(), StopRule("fixed", 1.0))
    assert v.continuous is Tri.NO


def test_integrand_random_exponential_stop():
    v = classify_deterministic_integrand(IntegrandFunction.exponential(1.0, 1.0), HALF_STABLE,
                                         StopRule("random", law="exponential"))
    assert v.absolutely_continuous is Tri.YES


def test_integrand_zero_rejected():
    with pytest.raises(PreconditionViolation):
        classify_deterministic_integrand(IntegrandFunction.constant(0.0, 1.0), brownian(), StopRule("fixed", 1.0))


# -- golden-table invariants ------------------------------------------------

def _killed(golden):
    return [sc for sc in golden if sc.mode == "killed"]


def test_classification_is_deterministic(golden):
    for sc in _killed(golden):
        a = classify_support(sc.xi, sc.eta, sc.q).to_dict()
        b = classify_support(sc.xi, sc.eta, sc.q).to_dict()
        assert a == b


def test_jump_restriction_never_enlarges_support(golden):
    checked = 0
    for sc in _killed(golden):
        full = classify_support(sc.xi, sc.eta, sc.q)
        for xi, eta in support_jump_restriction_pairs(sc.xi.triplet, sc.eta.triplet):
            part = classify_support(xi, eta, sc.q)
            assert support_subset(part, full, window=(-20.0, 20.0)), (sc.id, part.shape, full.shape)
            checked += 1
    assert checked >= 10


def test_atom_iff_eta_cpp_or_zero(golden):
    for sc in _killed(golden):
        law = classify_continuity_killed(sc.xi, sc.eta, sc.q)
        pe = profile(sc.eta.triplet)
        assert (law.continuous is Tri.NO) == (pe.is_compound_poisson or pe.is_zero), sc.id
        if pe.is_compound_poisson and pe.is_subordinator:
            assert classify_support(sc.xi, sc.eta, sc.q).contains(0.0, depth=1)


# -- properties over a small catalog ----------------------------------------

CATALOG = [
    zero_process(), deterministic(1.0), deterministic(-0.5), brownian(), brownian(0.5, 1.0),
    poisson(), poisson(2.0, -1.0), poisson(1.0, 0.5, drift=1.0), compound_poisson((1.0, 1.0), (-2.0, 1.0)),
    HALF_STABLE, LevyTriplet(0.0, (StablePiece(1.5, 1.0, 1.0),), 0.0),
    LevyTriplet.from_drift(0.0, (DensityPiece(0.0, 1.0, 1.0, -1.0),)),
    LevyTriplet.from_drift(1.0, (Atoms.of((-1.0, 1.0)),)),
    LevyTriplet.from_drift(0.0, (DensityPiece(1.0, 2.0, 1.0),)),
]
pairs = st.tuples(st.sampled_from(CATALOG), st.sampled_from(CATALOG), st.floats(0.1, 5.0))


@given(pairs)
@settings(max_examples=120, deadline=None)
def test_exactly_one_support_clause(pair):
    xi, eta, q = pair
    d = classify_support(xi, eta, q)
    main = [c for c in _clauses(d) if c.startswith("support.")]
    top = {c.split(".")[1] for c in main}
    assert len(top) == 1
    assert d.relation == "Equal"
    assert d.contains(0.0, 1e-9, depth=1)


@given(pairs)
@settings(max_examples=120, deadline=None)
def test_verdict_flags_are_consistent(pair):
    xi, eta, q = pair
    for v in (classify_continuity_killed(xi, eta, q), classify_fixed_t(xi, eta, q)):
        if v.absolutely_continuous is Tri.YES:
            assert v.continuous is Tri.YES and v.atom_at_zero is Tri.NO
        if v.continuous is Tri.YES:
            assert v.atom_at_zero is Tri.NO
        if any(f is not Tri.UNKNOWN for f in (v.atom_at_zero, v.continuous, v.absolutely_continuous)):
            assert v.trail and all(t.citation for t in v.trail)


@given(pairs)
@settings(max_examples=60, deadline=None)
def test_support_sign_follows_eta(pair):
    xi, eta, q = pair
    pe = profile(eta)
    d = classify_support(xi, eta, q)
    cs = d.to_closed_set((-30.0, 30.0), depth=8, resolution=1e-2)
    if pe.is_subordinator:
        assert cs.inf >= -1e-9
    if pe.neg_is_subordinator:
        assert cs.sup <= 1e-9
    assert not math.isnan(cs.inf)
