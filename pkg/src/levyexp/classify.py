"""Decision trees for the support and the (absolute) continuity of exponential functionals.

Every verdict carries a trail of clause ids such as ``support.iii.a`` or
``killed_ac.vi``.  The ids name the branch of the decision tree that fired;
the accompanying citation string states the condition in plain words.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .calculus import (
    IntegrandFunction,
    Threshold,
    check_acp,
    check_hartman_wintner,
    check_hawkes,
    check_kallenberg,
    marginal_ac,
)
from .errors import EnumerationOverflow, PreconditionViolation
from .model import INF, Atoms, ClosedSet, LevyTriplet, ProcessSpec, _num, _parse_num, profile


class Tri(str, enum.Enum):
    YES = "Yes"
    NO = "No"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class TrailEntry:
    clause: str
    citation: str
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"clause": self.clause, "citation": self.citation, "evidence": self.evidence}


def _spec(x) -> ProcessSpec:
    return x if isinstance(x, ProcessSpec) else ProcessSpec(x)


# ---------------------------------------------------------------------------
# support descriptors

SHAPES = ("Point", "ClosedInterval", "HalfLine", "FullLine", "PointPlusHalfLine",
          "SemigroupClosure", "UnionOfIntervals", "AdditiveClosure")


@dataclass(frozen=True)
class SupportDescriptor:
    """Algebraic description of a closed subset of the line.

    ``params`` by shape:

    * ``Point``: ``at``
    * ``ClosedInterval``: ``lo``, ``hi``
    * ``HalfLine``: ``direction`` (``"up"`` for ``[e, inf)``, ``"down"`` for ``(-inf, e]``), ``endpoint``
    * ``PointPlusHalfLine``: ``point``, ``direction``, ``endpoint``
    * ``SemigroupClosure``: ``xi_set`` (nested descriptor of the log-multiplier set),
      ``jump_support`` (a :class:`ClosedSet`); the set is the closure of
      ``sum_j (prod_{k<=j} a_k) b_j`` with ``ln a_k`` in ``xi_set`` and ``b_j`` in ``jump_support``
    * ``AdditiveClosure``: ``generators`` (a :class:`ClosedSet` of positive reals); the closure of
      ``{0}`` and all finite sums of generators
    * ``UnionOfIntervals``: ``points``, ``intervals`` and optionally ``sums_of`` (a
      :class:`ClosedSet` whose finite sums, together with 0, are also included)
    """

    shape: str
    params: dict = field(default_factory=dict)
    relation: str = "Equal"
    trail: tuple[TrailEntry, ...] = ()
    refinement: "SupportDescriptor | None" = None

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown support shape {self.shape!r}")
        if self.relation not in ("Equal", "Superset"):
            raise ValueError("relation must be Equal or Superset")
        object.__setattr__(self, "trail", tuple(self.trail))

    # constructors
    @classmethod
    def point(cls, at=0.0, **kw):
        return cls("Point", {"at": float(at)}, **kw)

    @classmethod
    def interval(cls, lo, hi, **kw):
        return cls("ClosedInterval", {"lo": float(lo), "hi": float(hi)}, **kw)

    @classmethod
    def half_line(cls, direction, endpoint, **kw):
        return cls("HalfLine", {"direction": direction, "endpoint": float(endpoint)}, **kw)

    @classmethod
    def full_line(cls, **kw):
        return cls("FullLine", {}, **kw)

    @classmethod
    def point_plus_half_line(cls, direction, endpoint, point=0.0, **kw):
        return cls("PointPlusHalfLine", {"point": float(point), "direction": direction,
                                         "endpoint": float(endpoint)}, **kw)

    # set views -----------------------------------------------------------
    def to_closed_set(self, window: tuple[float, float] = (-1e3, 1e3), depth: int = 6,
                      resolution: float = 1e-3, cap: int = 200_000) -> ClosedSet:
        """The set intersected with ``window``; semigroup shapes are enumerated to ``depth``."""
        lo, hi = window
        p = self.params
        s = self.shape
        if s == "Point":
            pts = [p["at"]] if lo <= p["at"] <= hi else []
            return ClosedSet(tuple(pts))
        if s == "ClosedInterval":
            return _clip(ClosedSet(intervals=((p["lo"], p["hi"]),)), window)
        if s == "HalfLine":
            iv = (p["endpoint"], INF) if p["direction"] == "up" else (-INF, p["endpoint"])
            return _clip(ClosedSet(intervals=(iv,)), window)
        if s == "FullLine":
            return ClosedSet(intervals=((lo, hi),))
        if s == "PointPlusHalfLine":
            iv = (p["endpoint"], INF) if p["direction"] == "up" else (-INF, p["endpoint"])
            return _clip(ClosedSet((p["point"],), (iv,)), window)
        if s == "UnionOfIntervals":
            base = _clip(ClosedSet(tuple(p.get("points", ())), tuple(map(tuple, p.get("intervals", ())))),
                         window)
            if p.get("sums_of") is not None:
                base = base.union(enumerate_semigroup(p["sums_of"], ClosedSet((0.0,)), window,
                                                      depth, resolution, cap))
            return base
        if s == "AdditiveClosure":
            return enumerate_additive(p["generators"], window, resolution, cap)
        if s == "SemigroupClosure":
            xi_set = p["xi_set"]
            hi_abs = max(abs(lo), abs(hi))
            b_min = _min_abs(p["jump_support"])
            log_cap = math.log(max(hi_abs / b_min, 1.0)) + 1e-9 if b_min > 0 else 0.0
            logs = xi_set.to_closed_set((-log_cap - 1.0, log_cap), depth, resolution, cap)
            return enumerate_semigroup(p["jump_support"], logs, window, depth, resolution, cap)
        raise AssertionError(s)

    def contains(self, x: float, eps: float = 1e-9, **kw) -> bool:
        w = max(abs(x) * 2 + 1.0, 10.0)
        return self.to_closed_set((-w, w), **kw).contains(x, eps)

    def key(self) -> tuple:
        """Shape and endpoints, for comparison against golden entries."""
        return (self.shape, _canon(self.params))

    def to_dict(self) -> dict:
        d = {"shape": self.shape, "params": _canon(self.params), "relation": self.relation,
             "trail": [t.to_dict() for t in self.trail]}
        if self.refinement is not None:
            d["refinement"] = self.refinement.to_dict()
        return d


def _canon(obj):
    if isinstance(obj, SupportDescriptor):
        return {"shape": obj.shape, "params": _canon(obj.params)}
    if isinstance(obj, ClosedSet):
        return obj.to_dict()
    if isinstance(obj, dict):
        return {k: _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, float):
        return _num(obj)
    return obj


def descriptor_from_dict(d: dict) -> SupportDescriptor:
    """Inverse of ``SupportDescriptor.to_dict`` for the shape and parameters (the trail is dropped)."""
    params = {}
    for k, v in d.get("params", {}).items():
        if k in ("jump_support", "generators", "sums_of") and v is not None:
            params[k] = ClosedSet(tuple(_parse_num(x) for x in v.get("points", ())),
                                  tuple((_parse_num(a), _parse_num(b)) for a, b in v.get("intervals", ())))
        elif k == "xi_set":
            params[k] = descriptor_from_dict(v)
        elif k in ("points",):
            params[k] = [_parse_num(x) for x in v]
        elif k == "intervals":
            params[k] = [[_parse_num(a), _parse_num(b)] for a, b in v]
        elif k == "direction":
            params[k] = v
        else:
            params[k] = _parse_num(v)
    ref = descriptor_from_dict(d["refinement"]) if d.get("refinement") else None
    return SupportDescriptor(d["shape"], params, d.get("relation", "Equal"), (), ref)


def _clip(cs: ClosedSet, window) -> ClosedSet:
    lo, hi = window
    pts = tuple(x for x in cs.points if lo <= x <= hi)
    ivs = tuple((max(a, lo), min(b, hi)) for a, b in cs.intervals if max(a, lo) <= min(b, hi))
    return ClosedSet(pts, ivs)


def _min_abs(cs: ClosedSet) -> float:
    cands = [abs(x) for x in cs.points]
    for a, b in cs.intervals:
        cands.append(0.0 if a <= 0 <= b else min(abs(a), abs(b)))
    return min(cands) if cands else 0.0


def _discretize(cs: ClosedSet, resolution: float, limit: float = INF, max_pts: int = 4000) -> np.ndarray:
    """Points of a closed set: its isolated points plus interval grids at ``resolution``."""
    pts = [x for x in cs.points if abs(x) <= limit]
    for a, b in cs.intervals:
        a, b = max(a, -limit), min(b, limit)
        if b < a:
            continue
        n = min(max_pts, int(math.ceil((b - a) / resolution)) + 1)
        pts.extend(np.linspace(a, b, max(n, 1)).tolist())
    return np.unique(np.asarray(pts, dtype=float))


def enumerate_additive(generators: ClosedSet, window, resolution: float = 1e-3,
                       cap: int = 200_000) -> ClosedSet:
    """``{0}`` and finite sums of positive generators, intersected with ``window``."""
    lo, hi = window
    g = _discretize(generators, resolution, limit=max(hi, 0.0))
    g = g[g > 0]
    values = {0.0} if lo <= 0 <= hi else set()
    if len(g) == 0 or hi <= 0:
        return ClosedSet(tuple(values))
    frontier = np.array([0.0])
    seen = {0}
    while frontier.size:
        nxt = (frontier[:, None] + g[None, :]).ravel()
        nxt = nxt[nxt <= hi + 1e-12]
        keys = np.round(nxt / resolution).astype(np.int64)
        keys, idx = np.unique(keys, return_index=True)
        fresh = [(k, v) for k, v in zip(keys.tolist(), nxt[idx].tolist()) if k not in seen]
        for k, v in fresh:
            seen.add(k)
            if v >= lo:
                values.add(v)
        if len(seen) > cap:
            raise EnumerationOverflow(f"additive closure exceeded {cap} points")
        frontier = np.array([v for _, v in fresh])
    return ClosedSet(tuple(values))


def enumerate_semigroup(jump_support: ClosedSet, log_multipliers: ClosedSet, window,
                        depth: int = 6, resolution: float = 1e-3, cap: int = 200_000) -> ClosedSet:
    """Values ``sum_{j<=n} (prod_{k<=j} a_k) b_j`` with ``n <= depth`` inside ``window``.

    ``log_multipliers`` holds the admissible ``ln a_k``; ``jump_support`` the ``b_j``.
    States are deduplicated on a grid of the given resolution.
    """
    lo, hi = window
    reach = max(abs(lo), abs(hi))
    b = _discretize(jump_support, resolution, limit=reach)
    b = b[b != 0]
    logs = _discretize(log_multipliers, resolution)
    if len(b) == 0:
        return ClosedSet((0.0,) if lo <= 0 <= hi else ())
    b_min = float(np.min(np.abs(b)))
    # a partial product P with P * b_min > reach can only push sums out of the window
    # when all jumps share a sign; with mixed signs keep a margin of one decade
    same_sign = bool(np.all(b > 0) or np.all(b < 0))
    log_cap = math.log(reach / b_min) + (0.0 if same_sign else math.log(10.0))
    logs = logs[logs <= log_cap + 1e-12]
    vals = [0.0]
    logp = [0.0]
    out = {0.0} if lo <= 0 <= hi else set()
    seen = {(0, 0)}
    for _ in range(depth):
        if len(vals) * len(logs) * len(b) > 50 * cap:
            raise EnumerationOverflow(f"semigroup enumeration step exceeds {50 * cap} candidates")
        v = np.asarray(vals)[:, None, None]
        lp = np.asarray(logp)[:, None, None] + logs[None, :, None]
        nv = v + np.exp(lp) * b[None, None, :]
        lp = np.broadcast_to(lp, nv.shape).ravel()
        nv = nv.ravel()
        keep = lp <= log_cap + 1e-12
        if same_sign:
            keep &= np.abs(nv) <= reach + resolution
        nv, lp = nv[keep], lp[keep]
        kv = np.round(nv / resolution).astype(np.int64)
        kl = np.round(lp / resolution).astype(np.int64)
        new_vals, new_logp = [], []
        for a, c, x, y in zip(kv.tolist(), kl.tolist(), nv.tolist(), lp.tolist()):
            if (a, c) in seen:
                continue
            seen.add((a, c))
            new_vals.append(x)
            new_logp.append(y)
            if lo - resolution <= x <= hi + resolution:
                out.add(x)
        if len(seen) > cap:
            raise EnumerationOverflow(f"semigroup enumeration exceeded {cap} states")
        if not new_vals:
            break
        vals, logp = new_vals, new_logp
    pts = np.unique(np.asarray(sorted(out)))
    if pts.size > 1:
        pts = pts[np.concatenate([[True], np.diff(pts) > 1e-12 * np.maximum(1.0, np.abs(pts[1:]))])]
    return ClosedSet(tuple(pts.tolist()))


# ---------------------------------------------------------------------------
# support classification


def _xi_log_set(xi: LevyTriplet) -> SupportDescriptor:
    """Support of ``-xi_T`` when ``xi`` is compound Poisson with negative jumps and no drift."""
    supp = xi.nu_support()
    gens = ClosedSet(tuple(-x for x in supp.points), tuple((-b, -a) for a, b in supp.intervals))
    return SupportDescriptor("AdditiveClosure", {"generators": gens})


def _jump_support(eta: LevyTriplet) -> ClosedSet:
    return eta.nu_support()


def _has_interval(cs: ClosedSet, side: int) -> list[tuple[float, float]]:
    out = []
    for a, b in cs.intervals:
        if side > 0:
            a = max(a, 0.0)
        else:
            b = min(b, 0.0)
        if b > a:
            out.append((a, b))
    return out


def _irrational_ratio(eta: LevyTriplet) -> tuple[Tri, dict]:
    """Whether some ``z1 < 0 < z2`` in the jump support have an irrational ratio.

    Decided only for atoms carrying exact symbolic tags.
    """
    import sympy

    neg, pos = [], []
    untagged = False
    for comp in eta.measure:
        if isinstance(comp, Atoms):
            for (x, _), e in zip(comp.atoms, comp.exact):
                if e is None:
                    untagged = True
                    continue
                (pos if x > 0 else neg).append(sympy.nsimplify(sympy.sympify(e)))
        else:
            untagged = True
    undecided = False
    for z1 in neg:
        for z2 in pos:
            r = sympy.simplify(z2 / z1).is_rational
            if r is False:
                return Tri.YES, {"z1": str(z1), "z2": str(z2)}
            if r is None:
                undecided = True
    if undecided or untagged:
        return Tri.UNKNOWN, {}
    return Tri.NO, {}


def _cpp_pair_refinement(xi: LevyTriplet, eta: LevyTriplet, pe, trail: list):
    """Refinements for two compound Poisson processes with jumps bounded away from zero
    and ``xi`` jumping only downwards.  Returns ``(descriptor or None, full_line: bool)``."""
    supp_xi = xi.nu_support()
    supp_eta = eta.nu_support()
    both_sides = pe.supp_nu_inf < 0 < pe.supp_nu_sup
    found: list[SupportDescriptor] = []

    # intervals in the log-multiplier generators
    best = None
    for a, b in supp_xi.intervals:
        if b > a:
            beta, alpha = a, b
            k = math.floor(alpha / (beta - alpha)) + 1
            if best is None or -k * alpha < best[0]:
                best = (-k * alpha, beta, alpha, k)
    if best is not None:
        shift, beta, alpha, k = best
        ev = {"beta": beta, "alpha": alpha, "k": k}
        if pe.is_subordinator:
            d = SupportDescriptor("UnionOfIntervals",
                                  {"points": [0.0], "intervals": [[math.exp(shift) * pe.supp_nu_inf, INF]],
                                   "sums_of": supp_eta}, relation="Superset")
            trail.append(TrailEntry("cpp_pair.i", "interval [beta, alpha] of downward xi jumps: "
                                    "sums of eta jumps plus [exp(-k alpha) inf supp nu_eta, inf)", ev))
            found.append(d)
        elif pe.neg_is_subordinator:
            d = SupportDescriptor("UnionOfIntervals",
                                  {"points": [0.0], "intervals": [[-INF, math.exp(shift) * pe.supp_nu_sup]],
                                   "sums_of": supp_eta}, relation="Superset")
            trail.append(TrailEntry("cpp_pair.i", "interval of downward xi jumps, eta decreasing: "
                                    "sums of eta jumps plus (-inf, exp(-k alpha) sup supp nu_eta]", ev))
            found.append(d)
        else:
            trail.append(TrailEntry("cpp_pair.i", "interval of downward xi jumps, eta jumps both ways: R", ev))
            return None, True

    pe_xi_sup = supp_xi.sup
    if pe.is_subordinator:
        for alpha, beta in _has_interval(supp_eta, 1):
            k = math.floor(alpha / (beta - alpha)) + 1
            ev = {"alpha": alpha, "beta": beta, "k": k}
            if math.log(beta / alpha) >= -pe_xi_sup:
                d = SupportDescriptor.point_plus_half_line("up", alpha, relation="Superset")
                trail.append(TrailEntry("cpp_pair.ii", "eta increasing with an interval [alpha, beta] of jumps, "
                                        "ln(beta/alpha) >= -sup supp nu_xi: {0} u [alpha, inf)", ev))
            else:
                ivs = [[l * alpha, l * beta] for l in range(1, k)] + [[k * alpha, INF]]
                d = SupportDescriptor("UnionOfIntervals", {"points": [0.0], "intervals": ivs},
                                      relation="Superset")
                trail.append(TrailEntry("cpp_pair.ii", "eta increasing with an interval of jumps: "
                                        "{0} u [l alpha, l beta] (l < k) u [k alpha, inf)", ev))
            found.append(d)
            break
    if pe.neg_is_subordinator:
        for beta, alpha in _has_interval(supp_eta, -1):
            k = math.floor(alpha / (beta - alpha)) + 1
            ev = {"alpha": alpha, "beta": beta, "k": k}
            if math.log(beta / alpha) >= -pe_xi_sup:
                d = SupportDescriptor.point_plus_half_line("down", alpha, relation="Superset")
                trail.append(TrailEntry("cpp_pair.iii", "eta decreasing with an interval of jumps, "
                                        "ln(beta/alpha) >= -sup supp nu_xi: (-inf, alpha] u {0}", ev))
            else:
                ivs = [[l * beta, l * alpha] for l in range(1, k)] + [[-INF, k * alpha]]
                d = SupportDescriptor("UnionOfIntervals", {"points": [0.0], "intervals": ivs},
                                      relation="Superset")
                trail.append(TrailEntry("cpp_pair.iii", "eta decreasing with an interval of jumps: "
                                        "(-inf, k alpha] u [l beta, l alpha] (l < k) u {0}", ev))
            found.append(d)
            break
    if both_sides:
        if _has_interval(supp_eta, 1) or _has_interval(supp_eta, -1):
            trail.append(TrailEntry("cpp_pair.iv", "eta jumps both ways and its jump support contains an interval: R"))
            return None, True
        irr, ev = _irrational_ratio(eta)
        trail.append(TrailEntry("cpp_pair.v", "eta jumps both ways; irrational ratio of a negative and a "
                                "positive jump size gives R", {"irrational": irr.value, **ev}))
        if irr is Tri.YES:
            return None, True
    return (found[0] if found else None), False


def classify_support(xi, eta, q: float) -> SupportDescriptor:
    """Support of ``int_0^tau exp(-xi_{s-}) d eta_s`` with ``tau ~ Exp(q)``."""
    if not q > 0:
        raise PreconditionViolation("killing rate q must be positive")
    xs, es = _spec(xi), _spec(eta)
    px, pe = profile(xs.triplet), profile(es.triplet)
    trail: list[TrailEntry] = []

    # (i)
    if pe.is_zero:
        trail.append(TrailEntry("support.i", "eta is the zero process: {0}"))
        return SupportDescriptor.point(0.0, trail=trail)

    xi_sub_pos = px.is_subordinator and px.drift is not None and px.drift > 0

    # (ii)
    if pe.is_deterministic:
        d = pe.drift
        if xi_sub_pos:
            ev = {"drift_eta": d, "drift_xi": px.drift}
            trail.append(TrailEntry("support.ii", "eta deterministic, xi a subordinator with positive drift: "
                                    "interval between 0 and drift_eta/drift_xi", ev))
            r = d / px.drift
            return SupportDescriptor.interval(min(0.0, r), max(0.0, r), trail=trail)
        trail.append(TrailEntry("support.ii", "eta deterministic, xi not a subordinator with positive drift: "
                                "half-line from 0 in the direction of the drift", {"drift_eta": d}))
        return SupportDescriptor.half_line("up" if d > 0 else "down", 0.0, trail=trail)

    neg_mass = es.triplet.nu_mass(-INF, 0.0) > 0
    pos_mass = es.triplet.nu_mass(0.0, INF) > 0

    # (iii)
    if not pe.finite_variation:
        trail.append(TrailEntry("support.iii.a", "eta has infinite variation: R"))
        return SupportDescriptor.full_line(trail=trail)
    if pe.zero_in_supp_nu and neg_mass and pos_mass:
        trail.append(TrailEntry("support.iii.b", "eta of finite variation, 0 in supp nu_eta, jumps both ways: R"))
        return SupportDescriptor.full_line(trail=trail)
    if pe.drift != 0 and neg_mass and pos_mass:
        trail.append(TrailEntry("support.iii.c", "eta of finite variation, non-zero drift, jumps both ways: R"))
        return SupportDescriptor.full_line(trail=trail)

    # (iv)
    if pe.zero_in_supp_nu or pe.drift != 0:
        if pe.is_subordinator:
            trail.append(TrailEntry("support.iv", "eta a non-deterministic subordinator, one-sided: [0, inf)"))
            return SupportDescriptor.half_line("up", 0.0, trail=trail)
        if pe.neg_is_subordinator:
            trail.append(TrailEntry("support.iv", "-eta a non-deterministic subordinator: (-inf, 0]"))
            return SupportDescriptor.half_line("down", 0.0, trail=trail)
        ev = {"drift_eta": pe.drift, "drift_xi": px.drift}
        if xi_sub_pos:
            r = pe.drift / px.drift
            if pe.drift > 0:
                trail.append(TrailEntry("support.iv", "one-sided eta jumps against a positive drift, xi a "
                                        "subordinator with positive drift: (-inf, drift_eta/drift_xi]", ev))
                return SupportDescriptor.half_line("down", r, trail=trail)
            trail.append(TrailEntry("support.iv", "one-sided eta jumps against a negative drift, xi a "
                                    "subordinator with positive drift: [drift_eta/drift_xi, inf)", ev))
            return SupportDescriptor.half_line("up", r, trail=trail)
        trail.append(TrailEntry("support.iv", "one-sided eta jumps against the drift, xi not a subordinator "
                                "with positive drift: R", ev))
        return SupportDescriptor.full_line(trail=trail)

    # (v): eta compound Poisson with jumps bounded away from zero
    jumps = _jump_support(es.triplet)
    xi_t = xs.triplet
    if px.neg_is_subordinator and (px.zero_in_supp_nu or (px.drift is not None and px.drift != 0)):
        if pe.is_subordinator:
            trail.append(TrailEntry("support.v.neg_xi_sub", "eta compound Poisson; -xi a subordinator with "
                                    "small jumps or drift: {0} u [inf supp nu_eta, inf)"))
            return SupportDescriptor.point_plus_half_line("up", pe.supp_nu_inf, trail=trail)
        if pe.neg_is_subordinator:
            trail.append(TrailEntry("support.v.neg_xi_sub", "eta compound Poisson decreasing; -xi a subordinator "
                                    "with small jumps or drift: (-inf, sup supp nu_eta] u {0}"))
            return SupportDescriptor.point_plus_half_line("down", pe.supp_nu_sup, trail=trail)
        trail.append(TrailEntry("support.v.neg_xi_sub", "eta compound Poisson with jumps both ways; -xi a "
                                "subordinator with small jumps or drift: R"))
        return SupportDescriptor.full_line(trail=trail)
    if px.is_zero:
        trail.append(TrailEntry("support.v.xi_zero", "eta compound Poisson, xi zero: closure of finite sums "
                                "of eta jump sizes"))
        return SupportDescriptor("SemigroupClosure",
                                 {"xi_set": SupportDescriptor.point(0.0), "jump_support": jumps}, trail=trail)
    exceptional = (px.is_compound_poisson and not px.zero_in_supp_nu and px.spectrally_negative)
    if not exceptional:
        if pe.is_subordinator:
            trail.append(TrailEntry("support.v.remaining", "eta compound Poisson increasing, remaining xi: [0, inf)"))
            return SupportDescriptor.half_line("up", 0.0, trail=trail)
        if pe.neg_is_subordinator:
            trail.append(TrailEntry("support.v.remaining", "eta compound Poisson decreasing, remaining xi: (-inf, 0]"))
            return SupportDescriptor.half_line("down", 0.0, trail=trail)
        trail.append(TrailEntry("support.v.remaining", "eta compound Poisson with jumps both ways, remaining xi: R"))
        return SupportDescriptor.full_line(trail=trail)

    trail.append(TrailEntry("support.v.closure", "eta compound Poisson, xi compound Poisson with downward "
                            "jumps bounded away from 0: closure of sums of products of exp(-xi) jumps "
                            "and eta jumps"))
    raw = SupportDescriptor("SemigroupClosure", {"xi_set": _xi_log_set(xi_t), "jump_support": jumps})
    refinement, full = _cpp_pair_refinement(xi_t, es.triplet, pe, trail)
    if full:
        return SupportDescriptor.full_line(trail=trail)
    return SupportDescriptor(raw.shape, raw.params, "Equal", trail, refinement)


def unkilled_support(xi, eta) -> SupportDescriptor | None:
    """Support without killing, for the deterministic pairs where it is a single point."""
    px, pe = profile(_spec(xi).triplet), profile(_spec(eta).triplet)
    if px.is_deterministic and pe.is_deterministic and px.drift > 0:
        return SupportDescriptor.point(pe.drift / px.drift, trail=(TrailEntry(
            "unkilled.deterministic", "both processes deterministic: drift_eta / drift_xi"),))
    return None


def support_subset(inner: SupportDescriptor, outer: SupportDescriptor,
                   window=(-50.0, 50.0), eps: float = 1e-6, resolution: float = 1e-2) -> bool:
    """Sampled check that ``inner`` lies in ``outer`` inside ``window``."""
    a = inner.to_closed_set(window, resolution=resolution)
    b = outer.to_closed_set((window[0] - 1, window[1] + 1), resolution=resolution)
    pts = _discretize(a, resolution)
    return bool(np.all(b.distance(pts) <= eps + resolution))


# ---------------------------------------------------------------------------
# law verdicts


@dataclass(frozen=True)
class LawVerdict:
    atom_at_zero: Tri
    continuous: Tri
    absolutely_continuous: Tri
    trail: tuple[TrailEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "trail", tuple(self.trail))
        if self.absolutely_continuous is Tri.YES:
            assert self.continuous is Tri.YES and self.atom_at_zero is Tri.NO, self
        if self.continuous is Tri.YES:
            assert self.atom_at_zero is Tri.NO, self
        if self.atom_at_zero is Tri.YES:
            assert self.continuous is Tri.NO and self.absolutely_continuous is Tri.NO, self
        if any(f is not Tri.UNKNOWN for f in (self.atom_at_zero, self.continuous, self.absolutely_continuous)):
            assert self.trail, "decided flags need a trail"

    def flags(self) -> dict:
        return {"atom_at_zero": self.atom_at_zero.value, "continuous": self.continuous.value,
                "absolutely_continuous": self.absolutely_continuous.value}

    def to_dict(self) -> dict:
        return {**self.flags(), "trail": [t.to_dict() for t in self.trail]}


class _Clauses:
    """Evaluates sufficient conditions in a fixed order; the first one that holds wins."""

    def __init__(self, prefix: str):
        self.prefix = prefix
        self.trail: list[TrailEntry] = []
        self.hit: str | None = None

    def check(self, clause: str, citation: str, test) -> bool:
        if self.hit is not None:
            return True
        ok, ev = test()
        if ok:
            self.hit = clause
            self.trail.append(TrailEntry(f"{self.prefix}.{clause}", citation, ev))
        return ok


def _kallenberg_or_hw(triplet, k_th, hw_th):
    k = check_kallenberg(triplet, k_th)
    if k.holds:
        return True, {"kallenberg": k.to_dict()}
    hw = check_hartman_wintner(triplet, hw_th)
    return hw.holds, {"kallenberg": k.to_dict(), "hartman_wintner": hw.to_dict()}


def classify_continuity_killed(xi, eta, q: float) -> LawVerdict:
    """Atom at zero, continuity and absolute continuity of the killed functional."""
    if not q > 0:
        raise PreconditionViolation("killing rate q must be positive")
    xs, es = _spec(xi), _spec(eta)
    px, pe = profile(xs.triplet), profile(es.triplet)
    if pe.is_zero or pe.is_compound_poisson:
        return LawVerdict(Tri.YES, Tri.NO, Tri.NO, [TrailEntry(
            "killed_continuity", "eta compound Poisson or zero: no eta jump before tau with positive "
            "probability, atom at 0", {"eta_compound_poisson": pe.is_compound_poisson})])
    trail = [TrailEntry("killed_continuity", "eta neither compound Poisson nor zero: continuous")]
    c = _Clauses("killed_ac")
    et, xt = es.triplet, xs.triplet
    c.check("v", "eta of finite variation with non-zero drift",
            lambda: (pe.finite_variation and pe.drift != 0, {"drift_eta": pe.drift}))
    c.check("i", "Kallenberg or Hartman-Wintner growth = inf for eta",
            lambda: _kallenberg_or_hw(et, "infinite", "infinite"))
    c.check("ii", "absolutely continuous part of nu_eta is infinite",
            lambda: (pe.nu_ac_total == INF, {"nu_ac_eta": _num(pe.nu_ac_total)}))
    c.check("iii", "xi satisfies the Hawkes condition and nu_eta is infinite",
            lambda: _hawkes_and(xs, pe.nu_total == INF))
    c.check("iv", "absolutely continuous part of nu_xi and nu_eta both infinite",
            lambda: (px.nu_ac_total == INF and pe.nu_total == INF, {}))
    c.check("vi", "xi compound Poisson and eta satisfies ACP",
            lambda: _cpp_and_acp(px, es))
    trail += c.trail
    if c.hit:
        return LawVerdict(Tri.NO, Tri.YES, Tri.YES, trail)
    if px.sigma2 > 0:
        trail.append(TrailEntry("killed_ac.gaussian_xi", "sigma_xi^2 > 0 and eta neither compound Poisson "
                                "nor zero: absolutely continuous"))
        return LawVerdict(Tri.NO, Tri.YES, Tri.YES, trail)
    if px.is_compound_poisson or px.is_zero:
        acp = check_acp(es)
        if acp.fails:
            trail.append(TrailEntry("killed_ac.cpp_xi_converse", "xi compound Poisson or zero and eta fails "
                                    "ACP: not absolutely continuous", {"acp": acp.to_dict()}))
            return LawVerdict(Tri.NO, Tri.YES, Tri.NO, trail)
        if px.is_zero and acp.holds:
            trail.append(TrailEntry("killed_ac.zero_xi", "xi zero: V is eta at an exponential time, "
                                    "absolutely continuous under ACP", {"acp": acp.to_dict()}))
            return LawVerdict(Tri.NO, Tri.YES, Tri.YES, trail)
    trail.append(TrailEntry("killed_ac.undecided", "no sufficient condition fired"))
    return LawVerdict(Tri.NO, Tri.YES, Tri.UNKNOWN, trail)


def _hawkes_and(xs, cond: bool):
    if not cond:
        return False, {}
    h = check_hawkes(xs.triplet)
    return h.holds, {"hawkes": h.to_dict()}


def _cpp_and_acp(px, es):
    if not px.is_compound_poisson:
        return False, {}
    a = check_acp(es)
    return a.holds, {"acp": a.to_dict()}


def _converges(xs: ProcessSpec, es: ProcessSpec) -> bool:
    return xs.has("unkilled_integral_converges") or es.has("unkilled_integral_converges")


def classify_ac_unkilled(xi, eta) -> LawVerdict:
    """Continuity and absolute continuity of ``int_0^inf exp(-xi_{s-}) d eta_s``."""
    xs, es = _spec(xi), _spec(eta)
    if not _converges(xs, es):
        raise PreconditionViolation("convergence of the unkilled integral must be asserted")
    px, pe = profile(xs.triplet), profile(es.triplet)
    if pe.is_zero:
        raise PreconditionViolation("eta must not be the zero process")
    if px.is_deterministic and pe.is_deterministic:
        return LawVerdict(Tri.NO, Tri.NO, Tri.NO, [TrailEntry(
            "unkilled_continuity", "both deterministic: the integral is the constant drift_eta/drift_xi")])
    trail = [TrailEntry("unkilled_continuity", "not both deterministic: continuous")]
    c = _Clauses("unkilled_ac")
    et = es.triplet
    nondet = True
    c.check("v", "eta of finite variation with non-zero drift, one process non-deterministic",
            lambda: (pe.finite_variation and pe.drift != 0 and nondet, {"drift_eta": pe.drift}))
    c.check("viii", "xi spectrally negative, one process non-deterministic",
            lambda: (px.spectrally_negative and nondet, {}))
    c.check("i", "Kallenberg or Hartman-Wintner liminf > 0 for eta",
            lambda: _kallenberg_or_hw(et, "positive", "positive"))
    c.check("ii", "absolutely continuous part of nu_eta non-trivial",
            lambda: (pe.nu_ac_total > 0, {"nu_ac_eta": _num(pe.nu_ac_total)}))
    c.check("iii", "xi satisfies the Hawkes condition, one process non-deterministic",
            lambda: _hawkes_and(xs, nondet))
    c.check("iv", "absolutely continuous part of nu_xi non-trivial",
            lambda: (px.nu_ac_total > 0, {}))
    c.check("vi", "xi compound Poisson and eta satisfies ACP", lambda: _cpp_and_acp(px, es))
    c.check("vii", "eta compound Poisson and xi satisfies ACP", lambda: _cpp_and_acp(pe, xs))
    trail += c.trail
    if c.hit:
        return LawVerdict(Tri.NO, Tri.YES, Tri.YES, trail)
    if px.sigma2 + pe.sigma2 > 0:
        trail.append(TrailEntry("unkilled_ac.gaussian", "sigma_eta^2 + sigma_xi^2 > 0"))
        return LawVerdict(Tri.NO, Tri.YES, Tri.YES, trail)
    trail.append(TrailEntry("unkilled_ac.undecided", "no sufficient condition fired"))
    return LawVerdict(Tri.NO, Tri.YES, Tri.UNKNOWN, trail)


def classify_fixed_t(xi, eta, t: float) -> LawVerdict:
    """Continuity and absolute continuity of ``int_0^t exp(-xi_{s-}) d eta_s`` for fixed ``t``."""
    if not t > 0:
        raise PreconditionViolation("horizon t must be positive")
    xs, es = _spec(xi), _spec(eta)
    px, pe = profile(xs.triplet), profile(es.triplet)
    if pe.is_zero or pe.is_compound_poisson:
        return LawVerdict(Tri.YES, Tri.NO, Tri.NO, [TrailEntry(
            "fixed_t_continuity", "eta compound Poisson or zero: atom at 0")])
    finite_pair = pe.sigma2 == 0 and px.sigma2 == 0 and pe.nu_total < INF and px.nu_total < INF
    if finite_pair:
        # on the event of no jumps before t, V = drift_eta * int_0^t exp(-drift_xi s) ds != 0
        atom0 = Tri.NO if pe.is_deterministic else Tri.UNKNOWN
        return LawVerdict(atom0, Tri.NO, Tri.NO, [TrailEntry(
            "fixed_t_continuity", "no Gaussian parts and finite jump activity on both sides: atom at the "
            "jump-free value", {"drift_eta": pe.drift, "drift_xi": px.drift})])
    trail = [TrailEntry("fixed_t_continuity", "continuous")]
    c = _Clauses("fixed_t_ac")
    et = es.triplet
    c.check("i", "Kallenberg liminf > 1/(4t) or Hartman-Wintner liminf > 1/(2t) for eta",
            lambda: _kallenberg_or_hw(et, Threshold("quarter_over", t), Threshold("half_over", t)))
    c.check("ii", "absolutely continuous part of nu_eta is infinite",
            lambda: (pe.nu_ac_total == INF, {}))
    c.check("iii", "xi satisfies the Hawkes condition and nu_eta is infinite",
            lambda: _hawkes_and(xs, pe.nu_total == INF))
    c.check("iv", "absolutely continuous part of nu_xi and nu_eta both infinite",
            lambda: (px.nu_ac_total == INF and pe.nu_total == INF, {}))
    c.check("v", "eta of finite variation with non-zero drift, and sigma_xi^2 > 0 or nu_xi infinite",
            lambda: (pe.finite_variation and pe.drift != 0 and (px.sigma2 > 0 or px.nu_total == INF), {}))
    c.check("vi", "xi compound Poisson (or zero) and every eta_s absolutely continuous",
            lambda: _cpp_and_marginal(px, et))
    trail += c.trail
    if c.hit:
        return LawVerdict(Tri.NO, Tri.YES, Tri.YES, trail)
    if px.sigma2 > 0:
        trail.append(TrailEntry("fixed_t_ac.gaussian_xi", "sigma_xi^2 > 0, eta neither compound Poisson nor zero"))
        return LawVerdict(Tri.NO, Tri.YES, Tri.YES, trail)
    trail.append(TrailEntry("fixed_t_ac.undecided", "no sufficient condition fired"))
    return LawVerdict(Tri.NO, Tri.YES, Tri.UNKNOWN, trail)


def _cpp_and_marginal(px, et):
    if not (px.is_compound_poisson or px.is_zero):
        return False, {}
    m = marginal_ac(et)
    return m.holds, {"marginals": m.to_dict()}


@dataclass(frozen=True)
class StopRule:
    """Upper integration limit: a fixed horizon ``t`` or an independent random time."""

    kind: str = "fixed"
    t: float = 1.0
    law: str = "exponential"

    def __post_init__(self):
        if self.kind not in ("fixed", "random"):
            raise ValueError("stop kind must be fixed or random")
        if self.kind == "random" and self.law not in ("exponential", "generic_ac", "generic"):
            raise ValueError("random stop law must be exponential, generic_ac or generic")
        if self.kind == "fixed" and not self.t > 0:
            raise ValueError("fixed horizon must be positive")

    @property
    def absolutely_continuous(self) -> bool:
        return self.kind == "random" and self.law in ("exponential", "generic_ac")

    def to_dict(self) -> dict:
        if self.kind == "fixed":
            return {"kind": "fixed", "t": _num(self.t)}
        return {"kind": "random", "law": self.law}


def classify_deterministic_integrand(f: IntegrandFunction, eta, stop: StopRule) -> LawVerdict:
    """Continuity and absolute continuity of ``int_0^t f d eta`` or ``int_0^R f d eta``."""
    es = _spec(eta)
    pe = profile(es.triplet)
    et = es.triplet
    if stop.kind == "fixed":
        g = f.restricted(stop.t)
        L = g.nonzero_measure()
        if L == 0:
            raise PreconditionViolation("integrand vanishes almost everywhere on the horizon")
        cont = pe.sigma2 > 0 or (L * pe.nu_total == INF)
        if not cont:
            mean = (pe.drift or 0.0) * g.integral()
            atom0 = Tri.YES if mean == 0 else Tri.UNKNOWN
            return LawVerdict(atom0, Tri.NO, Tri.NO, [TrailEntry(
                "integrand_continuity", "sigma_eta^2 = 0 and Leb(f != 0) * nu_eta(R) finite: atom at the "
                "jump-free value", {"nonzero_measure": _num(L), "jump_free_value": mean})])
        trail = [TrailEntry("integrand_continuity", "sigma_eta^2 > 0 or Leb(f != 0) * nu_eta(R) infinite",
                            {"nonzero_measure": _num(L)})]
        if L == INF:
            k_th = hw_th = Threshold("positive")
        else:
            k_th, hw_th = Threshold("quarter_over", L), Threshold("half_over", L)
        c = _Clauses("integrand_ac")
        c.check("i", "Leb(f != 0) * Kallenberg liminf > 1/4 or Leb(f != 0) * Hartman-Wintner liminf > 1/2",
                lambda: _kallenberg_or_hw(et, k_th, hw_th))
        c.check("ii", "Leb(f != 0) * nu_eta,ac(R) infinite", lambda: (pe.nu_ac_total == INF, {}))
        c.check("iii", "preimages of null sets under f are null and nu_eta infinite",
                lambda: (g.preimage_null and pe.nu_total == INF, {}))
        c.check("iv", "f constant and non-zero on an interval of length b with eta_b absolutely continuous",
                lambda: _constant_run(g, et))
        trail += c.trail
        if c.hit:
            return LawVerdict(Tri.NO, Tri.YES, Tri.YES, trail)
        trail.append(TrailEntry("integrand_ac.undecided", "no sufficient condition fired"))
        return LawVerdict(Tri.NO, Tri.YES, Tri.UNKNOWN, trail)

    # random stop
    if f.nonzero_measure() == 0:
        raise PreconditionViolation("integrand vanishes almost everywhere")
    if not f.nonzero_near_zero:
        raise PreconditionViolation("a random stop needs f != 0 on a set of positive measure near 0")
    if pe.is_zero or pe.is_compound_poisson:
        return LawVerdict(Tri.YES, Tri.NO, Tri.NO, [TrailEntry(
            "random_stop_continuity", "eta compound Poisson or zero: no jump before R with positive "
            "probability, atom at 0")])
    cont = pe.sigma2 > 0 or pe.nu_total == INF
    trail = []
    if cont:
        trail.append(TrailEntry("random_stop_continuity", "sigma_eta^2 > 0 or nu_eta infinite: continuous"))
    c = _Clauses("random_stop_ac")
    c.check("i", "Kallenberg or Hartman-Wintner growth = inf for eta",
            lambda: _kallenberg_or_hw(et, "infinite", "infinite"))
    c.check("ii", "nu_eta,ac(R) infinite", lambda: (pe.nu_ac_total == INF, {}))
    c.check("iii", "preimages of null sets under f are null and nu_eta infinite",
            lambda: (f.preimage_null and pe.nu_total == INF, {}))
    c.check("iv", "f constant and non-zero near 0 and every eta_t absolutely continuous",
            lambda: _near_zero_marginal(f, et))
    c.check("v", "eta of finite variation with non-zero drift, f non-zero a.e., R absolutely continuous",
            lambda: (pe.finite_variation and pe.drift != 0 and f.nonzero_everywhere
                     and stop.absolutely_continuous, {"stop_law": stop.law}))
    trail += c.trail
    if c.hit:
        return LawVerdict(Tri.NO, Tri.YES, Tri.YES, trail)
    if cont:
        trail.append(TrailEntry("random_stop_ac.undecided", "no sufficient condition fired"))
        return LawVerdict(Tri.NO, Tri.YES, Tri.UNKNOWN, trail)
    return LawVerdict(Tri.UNKNOWN, Tri.UNKNOWN, Tri.UNKNOWN,
                      [TrailEntry("random_stop.undecided", "finite activity with drift: no decision")])


def _constant_run(g: IntegrandFunction, et: LevyTriplet):
    b = g.longest_constant_run()
    if b <= 0:
        return False, {}
    m = marginal_ac(et)
    return m.holds, {"run_length": b, "marginals": m.to_dict()}


def _near_zero_marginal(f: IntegrandFunction, et: LevyTriplet):
    if not f.constant_near_zero:
        return False, {}
    m = marginal_ac(et)
    return m.holds, {"marginals": m.to_dict()}


def support_jump_restriction_pairs(xi: LevyTriplet, eta: LevyTriplet) -> Iterable[tuple[LevyTriplet, LevyTriplet]]:
    """All pairs obtained by deleting one atom component from ``xi`` or ``eta``."""
    for i, comp in enumerate(xi.measure):
        if isinstance(comp, Atoms):
            yield xi.without(i), eta
    for i, comp in enumerate(eta.measure):
        if isinstance(comp, Atoms):
            yield xi, eta.without(i)


__all__: Sequence[str] = (
    "Tri", "TrailEntry", "SupportDescriptor", "LawVerdict", "StopRule",
    "classify_support", "classify_continuity_killed", "classify_ac_unkilled", "classify_fixed_t",
    "classify_deterministic_integrand", "enumerate_semigroup", "enumerate_additive",
    "unkilled_support", "support_subset", "descriptor_from_dict", "support_jump_restriction_pairs",
)
