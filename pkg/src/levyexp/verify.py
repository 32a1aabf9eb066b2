"""Statistical checks of simulated batches against symbolic verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .classify import SupportDescriptor
from .errors import ParameterError
from .simulate import (RngStream, SampleBatch, SimParams, gou_step,
                       killed_functional_batch)

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass
class EmpiricalReport:
    """Outcome of one statistical test; ``status`` follows from ``statistic`` and ``threshold``."""

    scenario_id: str
    test: str
    statistic: float
    threshold: float
    status: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        return {"scenario_id": self.scenario_id, "test": self.test,
                "statistic": _jsonable(self.statistic), "threshold": _jsonable(self.threshold),
                "status": self.status, "diagnostics": {k: _jsonable(v) for k, v in self.diagnostics.items()}}


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _values(x) -> np.ndarray:
    v = x.values if isinstance(x, SampleBatch) else np.asarray(x, dtype=float)
    return np.asarray(v, dtype=float).ravel()


def _sid(*xs) -> str:
    for x in xs:
        if isinstance(x, SampleBatch) and x.scenario_id:
            return x.scenario_id
    return ""


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov


def ks_statistic(a, b) -> float:
    """Two-sample sup distance between empirical CDFs; ties handled by ``searchsorted``."""
    a = np.sort(_values(a))
    b = np.sort(_values(b))
    if a.size == 0 or b.size == 0:
        raise ParameterError("KS needs two non-empty samples")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_critical(n: int, m: int, level: float = 0.01) -> float:
    """Asymptotic critical value ``c(level) sqrt((n+m)/(n m))``."""
    return float(stats.kstwobign.isf(level) * math.sqrt((n + m) / (n * m)))


def ks_two_sample(a, b, level: float = 0.01, test: str = "ks_two_sample") -> EmpiricalReport:
    va, vb = _values(a), _values(b)
    d = ks_statistic(va, vb)
    crit = ks_critical(va.size, vb.size, level)
    return EmpiricalReport(_sid(a, b), test, d, crit, PASS if d <= crit else FAIL,
                           {"n": va.size, "m": vb.size, "level": level})


def ks_one_sample(a, cdf, level: float = 0.01, test: str = "ks_one_sample") -> EmpiricalReport:
    """KS against a continuous reference CDF (a callable on arrays)."""
    v = np.sort(_values(a))
    n = v.size
    F = cdf(v)
    d = float(max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n)))
    crit = float(stats.kstwobign.isf(level) / math.sqrt(n))
    return EmpiricalReport(_sid(a), test, d, crit, PASS if d <= crit else FAIL, {"n": n, "level": level})


# ---------------------------------------------------------------------------
# support


def support_coverage_test(batch, descriptor: SupportDescriptor, eps: float = 1e-6,
                          grid: float | None = None, depth: int = 8, min_coverage: float = 0.9,
                          window: tuple[float, float] | None = None, max_depth: int = 64,
                          decisive: bool | None = None) -> EmpiricalReport:
    """Outside fraction (must be zero) and, for ``Equal`` descriptors, grid coverage.

    Coverage counts the grid cells of the descriptor's intervals inside the
    empirical ``[q01, q99]`` range that hold at least one sample, plus isolated
    points in that range that have a sample within ``eps``.  Enumerated semigroup
    points are deep products whose probabilities decay geometrically, so for
    those shapes coverage is recorded but does not decide the outcome; ``decisive``
    overrides that rule (callers pass ``False`` for laws that are not continuous,
    whose mass need not spread over every cell).  Enumeration depth doubles, up to
    ``max_depth``, while samples remain unexplained.  The default ``grid`` is 1/200
    of the central range, coarsened where the edge density is thin.
    """
    v = _values(batch)
    if v.size == 0:
        raise ParameterError("empty batch")
    q01, q99 = (float(x) for x in np.quantile(v, [0.01, 0.99]))
    if grid is None:
        grid = _default_grid(v, q01, q99)
    lo, hi = float(v.min()), float(v.max())
    win = window or (lo - grid - eps, hi + grid + eps)
    enumerated = descriptor.shape in ("SemigroupClosure", "AdditiveClosure") or (
        descriptor.shape == "UnionOfIntervals" and descriptor.params.get("sums_of") is not None)
    smeared = enumerated and _interval_generators(descriptor)
    res = grid / 4 if smeared else min(grid, 1e-3)
    tol = eps
    if smeared:
        # interval generators are enumerated on a grid; the error grows with the
        # number of generator terms needed to reach |v|
        tol = eps + res * (1.0 + np.abs(v) / max(_generator_floor(descriptor), res))
    while True:
        cs = descriptor.to_closed_set(win, depth=depth, resolution=res)
        dist = cs.distance(v)
        outside = float(np.mean(dist > tol))
        if outside == 0.0 or not enumerated or depth >= max_depth:
            break
        depth = min(2 * depth, max_depth)
    diag = {"outside_fraction": outside, "eps": eps, "grid": grid, "window": list(win), "depth": depth,
            "relation": descriptor.relation, "max_distance": float(dist.max())}
    status = PASS if outside == 0.0 else FAIL
    if descriptor.relation == "Equal":
        cov = _coverage(v, cs, q01, q99, grid, eps)
        if cov is not None:
            coverage, cells, uncovered = cov
            diag.update(coverage=coverage, cells=cells, uncovered=uncovered[:20])
            use = (not enumerated) if decisive is None else decisive
            diag["coverage_decisive"] = use
            if use and coverage < min_coverage:
                status = FAIL
    return EmpiricalReport(_sid(batch), "support_coverage", outside, 0.0, status, diag)


def _default_grid(v: np.ndarray, q01: float, q99: float) -> float:
    """1/200 of the central range, coarsened so edge cells expect about 3 samples.

    Heavy tails make the density near ``q01``/``q99`` far smaller than the
    average over the window; a uniform 1/200 grid would then leave edge cells
    empty by chance alone.
    """
    if q99 <= q01:
        return 1e-2
    lo_a, lo_b, hi_a, hi_b = np.quantile(v, [0.005, 0.015, 0.985, 0.995])
    spacing = max(lo_b - lo_a, hi_b - hi_a) / (0.01 * v.size)
    return float(max((q99 - q01) / 200, 3.0 * spacing))


def _interval_generators(d: SupportDescriptor) -> bool:
    p = d.params
    sets = [p.get("jump_support"), p.get("generators"), p.get("sums_of")]
    if any(cs is not None and cs.intervals for cs in sets):
        return True
    inner = p.get("xi_set")
    return inner is not None and inner.shape in ("SemigroupClosure", "AdditiveClosure") and _interval_generators(inner)


def _generator_floor(d: SupportDescriptor) -> float:
    cs = d.params.get("jump_support") or d.params.get("generators") or d.params.get("sums_of")
    vals = [abs(x) for x in cs.points] + [min(abs(a), abs(b)) for a, b in cs.intervals]
    return min(vals) if vals else 1.0


def _coverage(v: np.ndarray, cs, lo: float, hi: float, grid: float, eps: float):
    sv = np.sort(v)
    hit_cells = set(np.floor(v / grid).astype(np.int64).tolist())
    total, covered, uncovered = 0, 0, []
    for a, b in cs.intervals:
        a, b = max(a, lo), min(b, hi)
        if a > b:
            continue
        # interior cells only, so that boundary cells need not be hit
        for c in range(int(math.ceil(a / grid)), int(math.floor(b / grid))):
            total += 1
            if c in hit_cells:
                covered += 1
            else:
                uncovered.append(c * grid)
    for p in cs.points:
        if lo <= p <= hi:
            total += 1
            i = np.searchsorted(sv, p - eps)
            if i < sv.size and sv[i] <= p + eps:
                covered += 1
            else:
                uncovered.append(p)
    if total == 0:
        return None
    return covered / total, total, uncovered


def lattice_test(batch, eps: float = 1e-9, must_hit=range(11)) -> EmpiricalReport:
    """All samples within ``eps`` of the nonnegative integers, and ``must_hit`` all realized."""
    v = _values(batch)
    r = np.round(v)
    far = (np.abs(v - r) > eps) | (r < 0)
    missing = sorted(set(must_hit) - set(r[~far].astype(np.int64).tolist()))
    frac = float(far.mean())
    ok = frac == 0.0 and not missing
    return EmpiricalReport(_sid(batch), "lattice", frac, 0.0, PASS if ok else FAIL,
                           {"missing": missing, "eps": eps})


# ---------------------------------------------------------------------------
# atoms


def atom_at_zero_test(batch, eps: float = 1e-12, expected: float | None = None,
                      n_sigma: float = 3.0) -> EmpiricalReport:
    """Estimate ``P(|V| <= eps)``; with ``expected``, pass iff within ``n_sigma`` binomial sigmas."""
    if not eps > 0:
        raise ParameterError("eps must be positive")
    v = _values(batch)
    n = v.size
    p_hat = float(np.mean(np.abs(v) <= eps))
    diag = {"mass": p_hat, "n": n, "eps": eps}
    if expected is None:
        radius = n_sigma * math.sqrt(max(p_hat * (1 - p_hat), 1.0 / n) / n)
        diag["radius"] = radius
        return EmpiricalReport(_sid(batch), "atom_at_zero", p_hat, radius, INCONCLUSIVE, diag)
    sigma = math.sqrt(expected * (1 - expected) / n)
    # a zero-variance prediction still allows nothing but an exact match
    thr = n_sigma * sigma
    dev = abs(p_hat - expected)
    diag.update(expected=expected, sigma=sigma)
    return EmpiricalReport(_sid(batch), "atom_at_zero", dev, thr, PASS if dev <= thr else FAIL, diag)


def max_atom_screen(batch, window: float = 1e-3, threshold: float | None = None) -> EmpiricalReport:
    """Largest empirical mass of a half-open window ``[x, x + window)`` anchored at a sample.

    Without ``threshold`` the report is inconclusive and only records the value;
    a continuity claim passes if the maximum stays below ``threshold``.
    """
    if not window > 0:
        raise ParameterError("window must be positive")
    v = np.sort(_values(batch))
    n = v.size
    right = np.searchsorted(v, v + window, side="left")
    counts = right - np.arange(n)
    i = int(np.argmax(counts))
    mass = float(counts[i] / n)
    diag = {"window": window, "at": float(v[i]), "n": n}
    if threshold is None:
        return EmpiricalReport(_sid(batch), "max_atom", mass, float("nan"), INCONCLUSIVE, diag)
    return EmpiricalReport(_sid(batch), "max_atom", mass, threshold, PASS if mass < threshold else FAIL, diag)


def continuity_threshold(n: int, window: float, density_bound: float = 1.0, n_sigma: float = 6.0) -> float:
    """Upper bound for the max window mass of a law with density at most ``density_bound``."""
    p = min(1.0, density_bound * window)
    return p + n_sigma * math.sqrt(max(p, 1.0 / n) / n)


# ---------------------------------------------------------------------------
# stationarity


def stationarity_test(xi, eta, q: float, t: float, n: int, rng: RngStream,
                      params: SimParams = SimParams(), level: float = 0.01,
                      x0: np.ndarray | None = None, scenario_id: str = "") -> EmpiricalReport:
    """KS between a batch and its image under one GOU step of length ``t``.

    By default the batch is a killed-functional sample (stationary law); ``x0``
    replaces it, e.g. for negative controls.
    """
    if not t > 0:
        raise ParameterError("t must be positive")
    seed = _stream_seed(rng)
    if x0 is None:
        z = killed_functional_batch(xi, eta, q, n, seed, params).values
    else:
        z = np.asarray(x0, dtype=float)
    out = gou_step(z, xi, eta, q, t, seed, params, key=(2,))
    rep = ks_two_sample(z, out, level, test="stationarity")
    rep.scenario_id = scenario_id
    rep.diagnostics.update(q=q, t=t)
    return rep


def fixed_point_test(xi, eta, q: float, t: float, n: int, rng: RngStream,
                     params: SimParams = SimParams(), level: float = 0.01,
                     z: np.ndarray | None = None, left: np.ndarray | None = None,
                     scenario_id: str = "") -> EmpiricalReport:
    """Compare ``Z`` with the right side of the random fixed-point equation built from an independent ``Z``.

    Unlike :func:`stationarity_test`, the input on the right is an independent
    copy ``Z'`` so the two samples compared are independent.  ``z`` replaces the
    right-hand input (negative controls); ``left`` supplies a precomputed ``Z``.
    """
    if t < 0:
        raise ParameterError("t must be >= 0")
    seed = _stream_seed(rng)
    if left is None:
        left = killed_functional_batch(xi, eta, q, n, seed, params).values
    if z is None:
        right_in = killed_functional_batch(xi, eta, q, n, seed + 0x9E3779B1, params).values
    else:
        right_in = np.asarray(z, dtype=float)
    right = right_in if t == 0 else gou_step(right_in, xi, eta, q, t, seed, params, key=(3,))
    rep = ks_two_sample(left, right, level, test="fixed_point")
    rep.scenario_id = scenario_id
    rep.diagnostics.update(q=q, t=t)
    return rep


def _stream_seed(rng) -> int:
    if isinstance(rng, RngStream):
        return int(rng.seed) if not rng.key else int(rng.seed) * 1_000_003 + hash(rng.key) % 1_000_003
    return int(rng)


# ---------------------------------------------------------------------------
# aggregation


def aggregate(reports: list[EmpiricalReport], max_failures: int = 1, test: str | None = None) -> EmpiricalReport:
    """Multi-seed summary: passes if at most ``max_failures`` seeds fail."""
    fails = sum(r.status == FAIL for r in reports)
    name = test or (reports[0].test if reports else "aggregate")
    sid = reports[0].scenario_id if reports else ""
    return EmpiricalReport(sid, name, float(fails), float(max_failures),
                           PASS if fails <= max_failures else FAIL,
                           {"seeds": len(reports), "failures": fails,
                            "statistics": [r.statistic for r in reports]})


def summary_table(reports: list[EmpiricalReport]) -> str:
    rows = [("scenario", "test", "statistic", "threshold", "status")]
    for r in reports:
        rows.append((r.scenario_id, r.test, f"{r.statistic:.4g}", f"{r.threshold:.4g}", r.status))
    widths = [max(len(row[i]) for row in rows) for i in range(5)]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows)
