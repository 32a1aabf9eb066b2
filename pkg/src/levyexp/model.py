"""Levy triplets over a closed catalog of Levy-measure components.

Every component answers its mass, small-jump moments, support and
absolutely continuous mass exactly, so that the structural predicates used by
the classifier (finite activity, finite variation, spectral sidedness, ...)
are decidable.  Infinity is ``math.inf``; the truncation function is the
indicator of ``[-1, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidTriplet

INF = math.inf

ASSERTABLE_FLAGS = frozenset(
    {"ACP_holds", "ACP_fails", "potential_measure_singular", "unkilled_integral_converges"}
)


def power_integral(q: float, lo: float, hi: float) -> float:
    """Integral of ``x**q`` over ``[lo, hi]`` with ``0 <= lo`` and ``hi`` possibly infinite."""
    if not hi > lo:
        return 0.0
    if q == -1.0:
        if lo == 0.0 or hi == INF:
            return INF
        return math.log(hi / lo)
    e = q + 1.0
    if e > 0:
        if hi == INF:
            return INF
        return (hi**e - lo**e) / e
    if lo == 0.0:
        return INF
    return (lo**e - (0.0 if hi == INF else hi**e)) / (-e)


# ---------------------------------------------------------------------------
# closed subsets of the line


@dataclass(frozen=True)
class ClosedSet:
    """Finite union of points and closed intervals (endpoints may be infinite)."""

    points: tuple[float, ...] = ()
    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        ivs = sorted((float(a), float(b)) for a, b in self.intervals)
        merged: list[list[float]] = []
        for a, b in ivs:
            if a > b:
                raise ValueError(f"empty interval [{a}, {b}]")
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        pts = sorted({float(p) for p in self.points})
        pts = [p for p in pts if not any(a <= p <= b for a, b in merged)]
        object.__setattr__(self, "intervals", tuple((a, b) for a, b in merged))
        object.__setattr__(self, "points", tuple(pts))

    @property
    def is_empty(self) -> bool:
        return not self.points and not self.intervals

    @property
    def inf(self) -> float:
        cands = list(self.points) + [a for a, _ in self.intervals]
        return min(cands) if cands else INF

    @property
    def sup(self) -> float:
        cands = list(self.points) + [b for _, b in self.intervals]
        return max(cands) if cands else -INF

    def union(self, other: "ClosedSet") -> "ClosedSet":
        return ClosedSet(self.points + other.points, self.intervals + other.intervals)

    def contains(self, x: float, eps: float = 0.0) -> bool:
        return bool(self.distance(np.asarray([x]))[0] <= eps)

    @property
    def contains_zero(self) -> bool:
        return self.contains(0.0)

    def distance(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = np.full(x.shape, np.inf)
        for p in self.points:
            d = np.minimum(d, np.abs(x - p))
        for a, b in self.intervals:
            inside = (x >= a) & (x <= b)
            dist = np.where(x < a, a - x, x - b)
            d = np.minimum(d, np.where(inside, 0.0, dist))
        return d

    def first_interval(self, side: int = 0) -> tuple[float, float] | None:
        """A nondegenerate interval of the set, restricted to one side of zero if requested."""
        for a, b in self.intervals:
            if side > 0:
                a = max(a, 0.0)
            elif side < 0:
                b = min(b, 0.0)
            if b > a:
                return (a, b)
        return None

    def to_dict(self) -> dict:
        return {"points": [_num(p) for p in self.points],
                "intervals": [[_num(a), _num(b)] for a, b in self.intervals]}


def _num(x: float):
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return x


def _parse_num(x) -> float:
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return INF
        if s in ("-inf", "-infinity"):
            return -INF
        return float(_exact_value(x))
    return float(x)


def _exact_value(expr: str) -> float:
    import sympy

    return float(sympy.sympify(expr))


# ---------------------------------------------------------------------------
# measure components


class MeasureComponent:
    """Interface implemented by every catalog component."""

    kind: str = ""

    def total_mass(self) -> float:
        raise NotImplementedError

    def mass(self, lo: float, hi: float) -> float:
        """Mass of the closed interval ``[lo, hi]`` with the origin removed."""
        raise NotImplementedError

    def abs_moment(self, k: float, eps: float) -> float:
        """``int_{0<|x|<=eps} |x|**k nu(dx)``."""
        raise NotImplementedError

    def signed_moment(self, lo: float, hi: float) -> float:
        """``int_{lo<=|x|<=hi} x nu(dx)`` for ``0 <= lo <= hi``."""
        raise NotImplementedError

    def support(self) -> ClosedSet:
        raise NotImplementedError

    def ac_mass(self) -> float:
        return 0.0

    @property
    def infinite_activity(self) -> bool:
        return self.total_mass() == INF

    def small_jump_index(self) -> float | None:
        """Blumenthal-Getoor type index of the mass piling up at 0, or None if none."""
        return None

    def scaled(self, c: float) -> "MeasureComponent":
        """Image measure under ``x -> c x`` (``c != 0``)."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Atoms(MeasureComponent):
    """Finitely many point masses.

    ``exact`` optionally carries a symbolic expression per location (``"sqrt(2)"``,
    ``"-log(2)"``, ``"1/3"``) so ratios of locations can be tested for rationality.
    """

    atoms: tuple[tuple[float, float], ...]
    exact: tuple[str | None, ...] = ()
    kind = "atoms"

    def __post_init__(self):
        atoms = tuple((float(x), float(m)) for x, m in self.atoms)
        if not atoms:
            raise InvalidTriplet("Atoms needs at least one atom")
        locs = [x for x, _ in atoms]
        if any(x == 0 or not math.isfinite(x) for x in locs):
            raise InvalidTriplet("atom locations must be finite and non-zero")
        if len(set(locs)) != len(locs):
            raise InvalidTriplet("atom locations must be distinct")
        if any(not (m > 0 and math.isfinite(m)) for _, m in atoms):
            raise InvalidTriplet("atom masses must be positive and finite")
        exact = tuple(self.exact) if self.exact else (None,) * len(atoms)
        if len(exact) != len(atoms):
            raise InvalidTriplet("exact tags must match the atoms")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "exact", exact)

    @classmethod
    def of(cls, *pairs) -> "Atoms":
        """Build from ``(location, mass)`` pairs; string locations are exact expressions."""
        atoms, exact = [], []
        for loc, m in pairs:
            if isinstance(loc, str):
                atoms.append((_exact_value(loc), m))
                exact.append(loc)
            elif isinstance(loc, int):
                atoms.append((float(loc), m))
                exact.append(str(loc))
            else:
                atoms.append((loc, m))
                exact.append(None)
        return cls(tuple(atoms), tuple(exact))

    def total_mass(self):
        return math.fsum(m for _, m in self.atoms)

    def mass(self, lo, hi):
        return math.fsum(m for x, m in self.atoms if lo <= x <= hi)

    def abs_moment(self, k, eps):
        return math.fsum(abs(x) ** k * m for x, m in self.atoms if abs(x) <= eps)

    def signed_moment(self, lo, hi):
        return math.fsum(x * m for x, m in self.atoms if lo <= abs(x) <= hi)

    def support(self):
        return ClosedSet(points=tuple(x for x, _ in self.atoms))

    def scaled(self, c):
        exact = tuple(None if e is None or not isinstance(c, (int, str)) else f"({c})*({e})"
                      for e in self.exact)
        return Atoms(tuple((c * x, m) for x, m in self.atoms), exact)

    def to_dict(self):
        out = []
        for (x, m), e in zip(self.atoms, self.exact):
            out.append([e if e is not None else x, m])
        return {"type": "atoms", "atoms": out}


@dataclass(frozen=True)
class DensityPiece(MeasureComponent):
    """Density ``c * |x|**p`` on the open interval ``(a, b)``, which may touch but not contain 0.

    ``p = 0`` is the constant family.
    """

    a: float
    b: float
    c: float
    p: float = 0.0
    kind = "density"

    def __post_init__(self):
        a, b, c, p = float(self.a), float(self.b), float(self.c), float(self.p)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "p", p)
        if not a < b:
            raise InvalidTriplet(f"density interval ({a}, {b}) is empty")
        if a < 0 < b:
            raise InvalidTriplet("density interval must not contain 0 in its interior")
        if not (c > 0 and math.isfinite(c)):
            raise InvalidTriplet("density coefficient must be positive")
        lo, hi = self._side()
        if lo == 0 and not p > -3:
            raise InvalidTriplet("density must satisfy int min(1, x^2) nu(dx) < inf near 0")
        if hi == INF and not p < -1:
            raise InvalidTriplet("density on an unbounded interval must have p < -1")

    def _side(self) -> tuple[float, float]:
        if self.a >= 0:
            return self.a, self.b
        return -self.b, -self.a

    @property
    def sign(self) -> int:
        return 1 if self.a >= 0 else -1

    def _abs_range(self, lo, hi):
        """Intersect ``[lo, hi]`` with the piece, expressed in ``|x|`` coordinates."""
        slo, shi = self._side()
        if self.sign > 0:
            return max(slo, lo), min(shi, hi)
        return max(slo, -hi), min(shi, -lo)

    def total_mass(self):
        lo, hi = self._side()
        return self.c * power_integral(self.p, lo, hi)

    def mass(self, lo, hi):
        l, h = self._abs_range(lo, hi)
        return self.c * power_integral(self.p, l, h)

    def abs_moment(self, k, eps):
        lo, hi = self._side()
        return self.c * power_integral(self.p + k, lo, min(hi, eps))

    def signed_moment(self, lo, hi):
        slo, shi = self._side()
        return self.sign * self.c * power_integral(self.p + 1, max(slo, lo), min(shi, hi))

    def support(self):
        return ClosedSet(intervals=((self.a, self.b),))

    def ac_mass(self):
        return self.total_mass()

    def small_jump_index(self):
        lo, _ = self._side()
        if lo == 0 and self.p <= -1:
            return -1.0 - self.p
        return None

    def scaled(self, c):
        # y = c x has density coef * |c|^(-p-1) |y|^p on c*(a, b)
        lo, hi = sorted((c * self.a, c * self.b))
        return DensityPiece(lo, hi, self.c * abs(c) ** (-self.p - 1.0), self.p)

    def to_dict(self):
        fam = {"family": "constant"} if self.p == 0 else {"family": "power", "p": self.p}
        return {"type": "density", "interval": [_num(self.a), _num(self.b)], "c": self.c, **fam}


@dataclass(frozen=True)
class StablePiece(MeasureComponent):
    """``c_plus x^(-1-alpha)`` on ``(0, r)`` and ``c_minus |x|^(-1-alpha)`` on ``(-r, 0)``."""

    alpha: float
    c_plus: float
    c_minus: float
    cutoff: float = 1.0
    kind = "stable"

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise InvalidTriplet("stable index must lie in (0, 2)")
        if self.c_plus < 0 or self.c_minus < 0 or self.c_plus + self.c_minus <= 0:
            raise InvalidTriplet("stable piece needs c_plus, c_minus >= 0 with positive sum")
        if not self.cutoff > 0:
            raise InvalidTriplet("stable cutoff must be positive")

    def densities(self) -> tuple[DensityPiece, ...]:
        p = -1.0 - self.alpha
        out = []
        if self.c_plus > 0:
            out.append(DensityPiece(0.0, self.cutoff, self.c_plus, p))
        if self.c_minus > 0:
            out.append(DensityPiece(-self.cutoff, 0.0, self.c_minus, p))
        return tuple(out)

    def total_mass(self):
        return INF

    def mass(self, lo, hi):
        return math.fsum(d.mass(lo, hi) for d in self.densities())

    def abs_moment(self, k, eps):
        return math.fsum(d.abs_moment(k, eps) for d in self.densities())

    def signed_moment(self, lo, hi):
        vals = [d.signed_moment(lo, hi) for d in self.densities()]
        if len(vals) == 2 and vals[0] == INF and vals[1] == -INF:
            # symmetric divergence cancels only for equal weights
            return 0.0 if self.c_plus == self.c_minus else math.nan
        return math.fsum(vals)

    def support(self):
        out = ClosedSet()
        for d in self.densities():
            out = out.union(d.support())
        return out

    def ac_mass(self):
        return INF

    def small_jump_index(self):
        return self.alpha

    def scaled(self, c):
        cp, cm = (self.c_plus, self.c_minus) if c > 0 else (self.c_minus, self.c_plus)
        k = abs(c) ** self.alpha
        return StablePiece(self.alpha, cp * k, cm * k, self.cutoff * abs(c))

    def to_dict(self):
        return {"type": "stable", "alpha": self.alpha, "c_plus": self.c_plus,
                "c_minus": self.c_minus, "cutoff": _num(self.cutoff)}


@dataclass(frozen=True)
class AtomSequence(MeasureComponent):
    """Countably many atoms accumulating at 0.

    Locations ``scale * base**(-growth**n)`` with masses
    ``weight * base**(alpha * growth**n)`` for ``n = 1, 2, ...``.  With
    ``alpha < 1`` and integer ``growth > 1/(1 - alpha)`` this is the classical
    subordinator whose potential measures are continuous singular.
    """

    base: float
    growth: float
    alpha: float
    scale: float = 1.0
    weight: float = 1.0
    kind = "atom_sequence"
    _atoms: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.base > 1 or not self.growth > 1:
            raise InvalidTriplet("atom sequence needs base > 1 and growth > 1")
        if not 0 < self.alpha < 2:
            raise InvalidTriplet("atom sequence exponent must lie in (0, 2)")
        if self.scale == 0 or self.weight <= 0:
            raise InvalidTriplet("atom sequence needs non-zero scale and positive weight")
        atoms = []
        lb = math.log(self.base)
        n = 1
        while self.growth**n * lb < 700:
            e = self.growth**n * lb
            atoms.append((self.scale * math.exp(-e), self.weight * math.exp(self.alpha * e)))
            n += 1
        object.__setattr__(self, "_atoms", tuple(atoms))

    def atom_list(self) -> tuple[tuple[float, float], ...]:
        """Atoms down to double-precision underflow, largest first."""
        return self._atoms

    def total_mass(self):
        return INF

    def mass(self, lo, hi):
        if lo <= 0.0 <= hi and (lo < 0 < self.scale or self.scale < 0 < hi):
            # interval reaches the accumulation point from the right side
            if (self.scale > 0 and hi > 0) or (self.scale < 0 and lo < 0):
                return INF
        return math.fsum(m for x, m in self._atoms if lo <= x <= hi)

    def abs_moment(self, k, eps):
        if k <= self.alpha:
            return INF if eps > 0 else 0.0
        return math.fsum(abs(x) ** k * m for x, m in self._atoms if abs(x) <= eps)

    def signed_moment(self, lo, hi):
        if lo == 0 and self.alpha >= 1:
            return math.copysign(INF, self.scale)
        return math.fsum(x * m for x, m in self._atoms if lo <= abs(x) <= hi)

    def support(self):
        return ClosedSet(points=tuple(x for x, _ in self._atoms) + (0.0,))

    def small_jump_index(self):
        return self.alpha

    def scaled(self, c):
        return AtomSequence(self.base, self.growth, self.alpha, self.scale * c, self.weight)

    def to_dict(self):
        return {"type": "atom_sequence", "base": self.base, "growth": self.growth,
                "alpha": self.alpha, "scale": self.scale, "weight": self.weight}


def component_from_dict(d: dict) -> MeasureComponent:
    t = d["type"]
    if t == "atoms":
        return Atoms.of(*[(loc, m) for loc, m in d["atoms"]])
    if t == "density":
        a, b = (_parse_num(v) for v in d["interval"])
        p = 0.0 if d.get("family", "constant") == "constant" else float(d["p"])
        return DensityPiece(a, b, float(d["c"]), p)
    if t == "stable":
        return StablePiece(float(d["alpha"]), float(d.get("c_plus", 0.0)),
                           float(d.get("c_minus", 0.0)), _parse_num(d.get("cutoff", 1.0)))
    if t == "atom_sequence":
        return AtomSequence(float(d["base"]), float(d["growth"]), float(d["alpha"]),
                            float(d.get("scale", 1.0)), float(d.get("weight", 1.0)))
    raise InvalidTriplet(f"unknown measure component type {t!r}")


# ---------------------------------------------------------------------------
# triplets


@dataclass(frozen=True)
class LevyTriplet:
    """``(sigma2, nu, gamma)`` under the truncation function ``1_[-1,1]``.

    ``drift`` is stored when the triplet was built from it, so that zero
    drifts stay exactly zero instead of being recovered by subtraction.
    """

    sigma2: float = 0.0
    measure: tuple[MeasureComponent, ...] = ()
    gamma: float = 0.0
    drift: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "measure", tuple(self.measure))
        if not (self.sigma2 >= 0 and math.isfinite(self.sigma2)):
            raise InvalidTriplet("Gaussian variance must be finite and >= 0")
        if not math.isfinite(self.gamma):
            raise InvalidTriplet("location parameter must be finite")
        for comp in self.measure:
            if not isinstance(comp, MeasureComponent):
                raise InvalidTriplet(f"not a measure component: {comp!r}")
        if self.drift is not None and not self.finite_variation:
            raise InvalidTriplet("a drift is only defined for finite-variation processes")

    @classmethod
    def from_drift(cls, drift: float, measure: Sequence[MeasureComponent] = ()) -> "LevyTriplet":
        measure = tuple(measure)
        m1 = math.fsum(c.signed_moment(0.0, 1.0) for c in measure)
        if not math.isfinite(m1):
            raise InvalidTriplet("finite-variation triplet needs int_{|x|<=1} |x| nu(dx) < inf")
        return cls(0.0, measure, float(drift) + m1, float(drift))

    # -- measure queries -------------------------------------------------
    def nu_total(self) -> float:
        return math.fsum(c.total_mass() for c in self.measure) if self.measure else 0.0

    def nu_mass(self, lo: float, hi: float) -> float:
        return math.fsum(c.mass(lo, hi) for c in self.measure) if self.measure else 0.0

    def abs_moment(self, eps: float) -> float:
        return math.fsum(c.abs_moment(1.0, eps) for c in self.measure) if self.measure else 0.0

    def second_moment(self, eps: float) -> float:
        return math.fsum(c.abs_moment(2.0, eps) for c in self.measure) if self.measure else 0.0

    def signed_moment(self, lo: float, hi: float) -> float:
        return math.fsum(c.signed_moment(lo, hi) for c in self.measure) if self.measure else 0.0

    def nu_support(self) -> ClosedSet:
        out = ClosedSet()
        for c in self.measure:
            out = out.union(c.support())
        return out

    def nu_ac_total(self) -> float:
        return math.fsum(c.ac_mass() for c in self.measure) if self.measure else 0.0

    @property
    def finite_variation(self) -> bool:
        return self.sigma2 == 0 and self.abs_moment(1.0) < INF

    def drift0(self) -> float | None:
        if not self.finite_variation:
            return None
        if self.drift is not None:
            return self.drift
        return self.gamma - self.signed_moment(0.0, 1.0)

    def without(self, index: int) -> "LevyTriplet":
        """Remove one component, keeping the remaining path decomposition fixed."""
        comp = self.measure[index]
        rest = self.measure[:index] + self.measure[index + 1:]
        if self.drift is not None:
            return LevyTriplet.from_drift(self.drift, rest)
        return LevyTriplet(self.sigma2, rest, self.gamma - comp.signed_moment(0.0, 1.0))

    def to_dict(self) -> dict:
        d: dict = {"sigma2": self.sigma2, "measure": [c.to_dict() for c in self.measure]}
        if self.drift is not None:
            d["drift"] = self.drift
        else:
            d["gamma"] = self.gamma
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LevyTriplet":
        measure = tuple(component_from_dict(c) for c in d.get("measure", []))
        sigma2 = float(d.get("sigma2", 0.0))
        if "drift" in d:
            if sigma2 != 0:
                raise InvalidTriplet("drift given together with a Gaussian part")
            return cls.from_drift(float(d["drift"]), measure)
        return cls(sigma2, measure, float(d.get("gamma", 0.0)))


# convenience constructors -----------------------------------------------------

def zero_process() -> LevyTriplet:
    return LevyTriplet.from_drift(0.0)


def deterministic(drift: float) -> LevyTriplet:
    return LevyTriplet.from_drift(drift)


def brownian(sigma2: float = 1.0, gamma: float = 0.0) -> LevyTriplet:
    return LevyTriplet(sigma2, (), gamma)


def poisson(rate: float = 1.0, jump: float | str = 1.0, drift: float = 0.0) -> LevyTriplet:
    return LevyTriplet.from_drift(drift, (Atoms.of((jump, rate)),))


def compound_poisson(*atoms, drift: float = 0.0) -> LevyTriplet:
    return LevyTriplet.from_drift(drift, (Atoms.of(*atoms),))


# ---------------------------------------------------------------------------
# structural profile


@dataclass(frozen=True)
class StructuralProfile:
    is_zero: bool
    is_deterministic: bool
    is_subordinator: bool
    neg_is_subordinator: bool
    is_compound_poisson: bool
    finite_variation: bool
    spectrally_positive: bool
    spectrally_negative: bool
    drift: float | None
    nu_total: float
    nu_ac_total: float
    zero_in_supp_nu: bool
    supp_nu_inf: float
    supp_nu_sup: float
    sigma2: float = 0.0

    def to_dict(self) -> dict:
        return {k: _num(v) if isinstance(v, float) else v for k, v in self.__dict__.items()}


def profile(triplet: LevyTriplet) -> StructuralProfile:
    """Structural predicates of a triplet, computed exactly from the catalog."""
    fv = triplet.finite_variation
    drift = triplet.drift0()
    nu_total = triplet.nu_total()
    neg = triplet.nu_mass(-INF, 0.0)
    pos = triplet.nu_mass(0.0, INF)
    supp = triplet.nu_support()
    sigma2 = triplet.sigma2
    return StructuralProfile(
        is_zero=sigma2 == 0 and nu_total == 0 and drift == 0,
        is_deterministic=sigma2 == 0 and nu_total == 0,
        is_subordinator=fv and drift >= 0 and neg == 0,
        neg_is_subordinator=fv and drift <= 0 and pos == 0,
        is_compound_poisson=sigma2 == 0 and 0 < nu_total < INF and drift == 0,
        finite_variation=fv,
        spectrally_positive=neg == 0,
        spectrally_negative=pos == 0,
        drift=drift,
        nu_total=nu_total,
        nu_ac_total=triplet.nu_ac_total(),
        zero_in_supp_nu=supp.contains_zero,
        supp_nu_inf=supp.inf,
        supp_nu_sup=supp.sup,
        sigma2=sigma2,
    )


def measure_query(triplet: LevyTriplet, query: str, arg=None):
    """Dispatch ``mass``, ``abs_moment``, ``second_moment``, ``supp`` and ``ac_mass`` queries."""
    if query == "mass":
        lo, hi = arg
        return triplet.nu_mass(lo, hi)
    if query == "abs_moment":
        return triplet.abs_moment(arg)
    if query == "second_moment":
        return triplet.second_moment(arg)
    if query == "supp":
        return triplet.nu_support()
    if query == "ac_mass":
        return triplet.nu_ac_total()
    raise ValueError(f"unknown measure query {query!r}")


# ---------------------------------------------------------------------------
# process specs and simulation recipes


@dataclass(frozen=True)
class JumpSource:
    """One exactly samplable finite-activity jump family.

    ``kind == "discrete"``: ``values``/``probs`` give the jump law.
    ``kind == "power"``: density proportional to ``x**p`` on ``[lo, hi]`` of ``|x|``, times ``sign``.
    """

    rate: float
    kind: str
    values: tuple[float, ...] = ()
    probs: tuple[float, ...] = ()
    lo: float = 0.0
    hi: float = 0.0
    p: float = 0.0
    sign: int = 1

    def sample(self, gen: np.random.Generator, k: int) -> np.ndarray:
        if self.kind == "discrete":
            if len(self.values) == 1:
                return np.full(k, self.values[0])
            idx = gen.choice(len(self.values), size=k, p=np.asarray(self.probs))
            return np.asarray(self.values)[idx]
        u = gen.random(k)
        e = self.p + 1.0
        if e == 0:
            x = self.lo * (self.hi / self.lo) ** u
        else:
            lo_e = self.lo**e if self.lo > 0 else 0.0
            hi_e = 0.0 if self.hi == INF else self.hi**e
            x = (lo_e + u * (hi_e - lo_e)) ** (1.0 / e)
        return self.sign * x

    def as_component(self) -> MeasureComponent:
        if self.kind == "discrete":
            return Atoms(tuple((v, self.rate * w) for v, w in zip(self.values, self.probs)))
        a, b = (self.lo, self.hi) if self.sign > 0 else (-self.hi, -self.lo)
        c = self.rate / power_integral(self.p, self.lo, self.hi)
        return DensityPiece(a, b, c, self.p)


@dataclass(frozen=True)
class SimRecipe:
    """Levy-Ito decomposition used by the simulator.

    The simulated process is ``drift_rate * t + sqrt(sigma2 + small_var) W_t``
    plus uncompensated jumps from ``jumps``; ``small_var`` is zero under the
    ``drop`` policy and equals the truncated second moment under ``gaussian``.
    """

    drift_rate: float
    sigma2: float
    jumps: tuple[JumpSource, ...]
    delta: float
    policy: str
    small_var: float
    truncation_error: float

    @property
    def jump_rate(self) -> float:
        return math.fsum(j.rate for j in self.jumps)

    @property
    def diffusive_variance(self) -> float:
        return self.sigma2 + self.small_var

    @property
    def exact(self) -> bool:
        """True when no Brownian or Gaussian-substituted part is present."""
        return self.diffusive_variance == 0

    def sample_jumps(self, gen: np.random.Generator, k: int) -> np.ndarray:
        if k == 0 or not self.jumps:
            return np.zeros(k)
        if len(self.jumps) == 1:
            return self.jumps[0].sample(gen, k)
        rates = np.array([j.rate for j in self.jumps])
        which = gen.choice(len(self.jumps), size=k, p=rates / rates.sum())
        out = np.empty(k)
        for i, src in enumerate(self.jumps):
            sel = which == i
            out[sel] = src.sample(gen, int(sel.sum()))
        return out

    def recompose(self) -> LevyTriplet:
        """Triplet of the process actually simulated."""
        measure = tuple(j.as_component() for j in self.jumps)
        m1 = math.fsum(c.signed_moment(0.0, 1.0) for c in measure)
        return LevyTriplet(self.diffusive_variance, measure, self.drift_rate + m1)


@dataclass(frozen=True)
class ProcessSpec:
    """A triplet plus externally known facts that the catalog cannot decide."""

    triplet: LevyTriplet
    asserted_flags: frozenset = frozenset()

    def __post_init__(self):
        flags = frozenset(self.asserted_flags)
        bad = flags - ASSERTABLE_FLAGS
        if bad:
            raise InvalidTriplet(f"unknown asserted flags {sorted(bad)}")
        if {"ACP_holds", "ACP_fails"} <= flags:
            raise InvalidTriplet("ACP cannot be asserted both ways")
        if "potential_measure_singular" in flags and "ACP_holds" in flags:
            raise InvalidTriplet("a singular potential measure contradicts ACP")
        object.__setattr__(self, "asserted_flags", flags)

    @property
    def profile(self) -> StructuralProfile:
        return profile(self.triplet)

    def has(self, flag: str) -> bool:
        return flag in self.asserted_flags

    def sim_recipe(self, delta: float = 1e-3, policy: str = "gaussian") -> SimRecipe:
        return sim_recipe(self.triplet, delta, policy)

    def to_dict(self) -> dict:
        d = self.triplet.to_dict()
        if self.asserted_flags:
            d["flags"] = sorted(self.asserted_flags)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProcessSpec":
        return cls(LevyTriplet.from_dict(d), frozenset(d.get("flags", ())))


def spec(triplet: LevyTriplet, *flags: str) -> ProcessSpec:
    return ProcessSpec(triplet, frozenset(flags))


def sim_recipe(triplet: LevyTriplet, delta: float = 1e-3, policy: str = "gaussian") -> SimRecipe:
    """Split a triplet into drift, Gaussian part and exactly samplable jump families."""
    from .errors import ParameterError

    if policy not in ("drop", "gaussian"):
        raise ParameterError(f"unknown small-jump policy {policy!r}")
    finite = [c for c in triplet.measure if not c.infinite_activity]
    infinite = [c for c in triplet.measure if c.infinite_activity]
    if infinite and not 0 < delta <= 1:
        raise ParameterError("small-jump cutoff delta must lie in (0, 1]")

    jumps: list[JumpSource] = []
    for comp in finite:
        jumps.extend(_sources(comp, 0.0))
    small_mean = small_var = 0.0
    for comp in infinite:
        jumps.extend(_sources(comp, delta))
        small_var += comp.abs_moment(2.0, delta) - _boundary(comp, delta, 2.0)
        if triplet.finite_variation:
            small_mean += comp.signed_moment(0.0, delta) - _boundary_signed(comp, delta)

    drift0 = triplet.drift0()
    if drift0 is not None:
        b = drift0 + small_mean
    else:
        b = triplet.gamma
        b -= math.fsum(c.signed_moment(0.0, 1.0) for c in finite)
        b -= math.fsum(c.signed_moment(delta, 1.0) for c in infinite)
    return SimRecipe(
        drift_rate=b,
        sigma2=triplet.sigma2,
        jumps=tuple(j for j in jumps if j.rate > 0),
        delta=delta,
        policy=policy,
        small_var=small_var if policy == "gaussian" else 0.0,
        truncation_error=small_var,
    )


def _boundary(comp, delta, k):
    # atoms sitting exactly at |x| = delta are simulated as big jumps
    if isinstance(comp, AtomSequence):
        return math.fsum(abs(x) ** k * m for x, m in comp.atom_list() if abs(x) == delta)
    return 0.0


def _boundary_signed(comp, delta):
    if isinstance(comp, AtomSequence):
        return math.fsum(x * m for x, m in comp.atom_list() if abs(x) == delta)
    return 0.0


def _sources(comp: MeasureComponent, delta: float) -> list[JumpSource]:
    if isinstance(comp, Atoms):
        rate = comp.total_mass()
        return [JumpSource(rate, "discrete", tuple(x for x, _ in comp.atoms),
                           tuple(m / rate for _, m in comp.atoms))]
    if isinstance(comp, AtomSequence):
        big = [(x, m) for x, m in comp.atom_list() if abs(x) >= delta]
        if not big:
            return []
        rate = math.fsum(m for _, m in big)
        return [JumpSource(rate, "discrete", tuple(x for x, _ in big),
                           tuple(m / rate for _, m in big))]
    if isinstance(comp, StablePiece):
        out = []
        for d in comp.densities():
            out.extend(_sources(d, delta))
        return out
    if isinstance(comp, DensityPiece):
        lo, hi = comp._side()
        lo = max(lo, delta)
        if not hi > lo:
            return []
        rate = comp.c * power_integral(comp.p, lo, hi)
        return [JumpSource(rate, "power", lo=lo, hi=hi, p=comp.p, sign=comp.sign)]
    raise TypeError(f"cannot simulate component {comp!r}")


def iter_components(triplet: LevyTriplet) -> Iterable[MeasureComponent]:
    """Flattened components with stable pieces expanded into their two densities."""
    for c in triplet.measure:
        if isinstance(c, StablePiece):
            yield from c.densities()
        else:
            yield c
