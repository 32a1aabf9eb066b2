"""Integrals of deterministic functions against a Levy process, and the
analytic side conditions (Kallenberg, Hartman-Wintner, Hawkes, ACP) used by
the classifier.

The transform of a triplet under ``int_0^t f(s) d eta_s`` is computed
component by component.  Constant pieces map catalog components to scaled
catalog components exactly; exponential pieces map atoms to ``1/|x|``
densities exactly and tabulate the image of densities on a logarithmic grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from . import _fourier
from .errors import QuadratureFailure, UnsupportedCombination
from .model import (
    INF,
    AtomSequence,
    Atoms,
    DensityPiece,
    LevyTriplet,
    MeasureComponent,
    ProcessSpec,
    StablePiece,
    iter_components,
    power_integral,
    profile,
)

CELLS_PER_DECADE = 512


# ---------------------------------------------------------------------------
# integrands


@dataclass(frozen=True)
class IntegrandPiece:
    """``a`` (constant) or ``a * exp(-b s)`` (exponential) on ``[start, end)``."""

    start: float
    end: float
    kind: str = "constant"
    a: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "exponential"):
            raise ValueError(f"unknown integrand form {self.kind!r}")
        if not (0 <= self.start < self.end):
            raise ValueError("integrand piece needs 0 <= start < end")
        if self.end == INF and self.kind == "exponential" and self.a != 0 and not self.b > 0:
            raise ValueError("exponential piece on an unbounded interval needs b > 0")
        if self.end == INF and self.kind == "constant" and self.a != 0:
            raise ValueError("non-zero constant piece must have finite length")

    @property
    def is_exponential(self) -> bool:
        return self.kind == "exponential" and self.b != 0

    @property
    def length(self) -> float:
        return self.end - self.start

    @property
    def nonzero(self) -> bool:
        return self.a != 0

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant" or self.b == 0:
            return np.full(s.shape, float(self.a))
        return self.a * np.exp(-self.b * s)

    def integral(self, power: int = 1) -> float:
        """``int f(s)**power ds`` over the piece."""
        if self.a == 0:
            return 0.0
        a = self.a**power
        if not self.is_exponential:
            return a * self.length
        b = self.b * power
        tail = 0.0 if self.end == INF else math.exp(-b * self.end)
        return a * (math.exp(-b * self.start) - tail) / b

    def to_dict(self) -> dict:
        d = {"interval": [self.start, "inf" if self.end == INF else self.end],
             "form": self.kind, "a": self.a}
        if self.kind == "exponential":
            d["b"] = self.b
        return d


@dataclass(frozen=True)
class IntegrandFunction:
    """Piecewise constant / exponential function on ``[0, T)``."""

    pieces: tuple[IntegrandPiece, ...]

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise ValueError("integrand needs at least one piece")
        if pieces[0].start != 0:
            raise ValueError("integrand pieces must start at 0")
        for left, right in zip(pieces, pieces[1:]):
            if left.end != right.start:
                raise ValueError("integrand pieces must partition the domain")
        object.__setattr__(self, "pieces", pieces)

    # constructors ------------------------------------------------------
    @classmethod
    def constant(cls, c: float, t: float) -> "IntegrandFunction":
        return cls((IntegrandPiece(0.0, t, "constant", c),))

    @classmethod
    def exponential(cls, a: float, b: float, t: float = INF) -> "IntegrandFunction":
        return cls((IntegrandPiece(0.0, t, "exponential", a, b),))

    @classmethod
    def step(cls, knots: Sequence[float], values: Sequence[float]) -> "IntegrandFunction":
        """Step function equal to ``values[i]`` on ``[knots[i], knots[i+1])`` with ``knots[0] = 0``."""
        if len(knots) != len(values) + 1:
            raise ValueError("step function needs len(knots) == len(values) + 1")
        return cls(tuple(IntegrandPiece(float(knots[i]), float(knots[i + 1]), "constant", float(v))
                         for i, v in enumerate(values)))

    # queries -----------------------------------------------------------
    @property
    def domain_end(self) -> float:
        return self.pieces[-1].end

    def restricted(self, t: float) -> "IntegrandFunction":
        """The function on ``[0, t)``, pieces beyond ``t`` dropped or cut."""
        if t >= self.domain_end:
            return self
        out = []
        for p in self.pieces:
            if p.start >= t:
                break
            out.append(IntegrandPiece(p.start, min(p.end, t), p.kind, p.a, p.b))
        return IntegrandFunction(tuple(out))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape)
        for p in self.pieces:
            sel = (s >= p.start) & (s < p.end)
            out = np.where(sel, p(s), out)
        return out

    def nonzero_measure(self) -> float:
        """Lebesgue measure of ``{s : f(s) != 0}``."""
        return math.fsum(p.length for p in self.pieces if p.nonzero)

    def integral(self, power: int = 1) -> float:
        return math.fsum(p.integral(power) for p in self.pieces)

    @property
    def strictly_positive(self) -> bool:
        return all(p.a > 0 for p in self.pieces)

    @property
    def nonzero_everywhere(self) -> bool:
        return all(p.nonzero for p in self.pieces)

    @property
    def nonzero_near_zero(self) -> bool:
        return self.pieces[0].nonzero

    @property
    def constant_near_zero(self) -> bool:
        first = self.pieces[0]
        return first.nonzero and not first.is_exponential

    def longest_constant_run(self) -> float:
        return max((p.length for p in self.pieces if p.nonzero and not p.is_exponential),
                   default=0.0)

    @property
    def preimage_null(self) -> bool:
        """Preimages of null subsets of ``R \\ {0}`` are null.

        True when every non-zero piece is a strictly monotone exponential;
        a non-zero constant piece maps an interval onto a single point.
        """
        return all(p.is_exponential for p in self.pieces if p.nonzero)

    def to_dict(self) -> dict:
        return {"pieces": [p.to_dict() for p in self.pieces]}

    @classmethod
    def from_dict(cls, d: dict) -> "IntegrandFunction":
        pieces = []
        for pd in d["pieces"]:
            a, b = pd["interval"]
            end = INF if isinstance(b, str) else float(b)
            pieces.append(IntegrandPiece(float(a), end, pd.get("form", "constant"),
                                         float(pd.get("a", 1.0)), float(pd.get("b", 0.0))))
        return cls(tuple(pieces))


# ---------------------------------------------------------------------------
# characteristic exponents


def _atoms_exponent(atoms, z: float) -> complex:
    x = np.array([a for a, _ in atoms], dtype=float)
    m = np.array([b for _, b in atoms], dtype=float)
    y = z * x
    small = np.abs(y) < 1e-3
    re = np.where(small, -0.5 * y**2 + y**4 / 24.0, np.cos(y) - 1.0)
    sin_minus = np.where(small, -(y**3) / 6.0 + y**5 / 120.0, np.sin(y) - y)
    inside = np.abs(x) <= 1.0
    im = np.where(inside, sin_minus, np.sin(y))
    return complex(math.fsum(m * re), math.fsum(m * im))


def component_exponent(comp: MeasureComponent, z: float) -> complex:
    """``int (e^{izx} - 1 - izx 1{|x|<=1}) nu(dx)`` for one component."""
    if z == 0:
        return 0j
    if isinstance(comp, Atoms):
        return _atoms_exponent(comp.atoms, z)
    if isinstance(comp, AtomSequence):
        return _atoms_exponent(comp.atom_list(), z)
    if isinstance(comp, StablePiece):
        return sum((component_exponent(d, z) for d in comp.densities()), 0j)
    if isinstance(comp, DensityPiece):
        lo, hi = comp._side()
        # the compensator acts on |x| <= 1 only; split there to keep sin_part's cut at w
        return _fourier.density_exponent(comp.c, comp.p, lo, hi, comp.sign, z)
    raise TypeError(f"unsupported component {comp!r}")


def char_exponent(triplet: LevyTriplet, z: float) -> complex:
    """Levy-Khintchine exponent ``Psi(z)`` with ``E e^{iz L_1} = e^{Psi(z)}``."""
    z = float(z)
    if z == 0:
        return 0j
    out = complex(-0.5 * triplet.sigma2 * z * z, triplet.gamma * z)
    for comp in triplet.measure:
        out += component_exponent(comp, z)
    return out


@dataclass(frozen=True)
class CharExponent:
    """Callable exponent, either of a triplet or given by a quadrature rule."""

    func: Callable[[float], complex]
    triplet: LevyTriplet | None = None

    @classmethod
    def of(cls, triplet: LevyTriplet) -> "CharExponent":
        return cls(lambda z: char_exponent(triplet, z), triplet)

    def __call__(self, z: float) -> complex:
        return self.func(float(z))


# ---------------------------------------------------------------------------
# transform of a triplet under int f d eta


def _weighted_component(comp: MeasureComponent, w: float) -> MeasureComponent:
    """Multiply a component's mass by ``w > 0``."""
    if isinstance(comp, Atoms):
        return Atoms(tuple((x, m * w) for x, m in comp.atoms), comp.exact)
    if isinstance(comp, DensityPiece):
        return DensityPiece(comp.a, comp.b, comp.c * w, comp.p)
    if isinstance(comp, StablePiece):
        return StablePiece(comp.alpha, comp.c_plus * w, comp.c_minus * w, comp.cutoff)
    if isinstance(comp, AtomSequence):
        return AtomSequence(comp.base, comp.growth, comp.alpha, comp.scale, comp.weight * w)
    raise TypeError(f"unsupported component {comp!r}")


def _log_tail_integral(c: float, p: float, lo: float, hi: float, u0: float, u1: float) -> float:
    """``int_{u0}^{u1} M(u)/u du`` with ``M(u) = c int_{max(lo,u)}^{hi} x^p dx``.

    Equals ``c [int_{max(lo,u0)}^{min(hi,u1)} x^p ln(x/u0) dx + ln(u1/u0) int_{max(lo,u1)}^{hi} x^p dx]``.
    """
    e = p + 1.0

    def xlog(x):  # antiderivative of x^p ln(x / u0)
        if e == 0:
            return 0.5 * math.log(x / u0) ** 2
        return x**e * (math.log(x / u0) / e - 1.0 / e**2)

    a, b = max(lo, u0), min(hi, u1)
    first = 0.0
    if b > a:
        top = 0.0 if (b == INF and e < 0) else xlog(b)
        first = top - xlog(a)
    second = 0.0
    if u1 < INF:
        second = math.log(u1 / u0) * power_integral(p, max(lo, u1), hi)
    return c * (first + second)


def _density_times_exponential(d: DensityPiece, piece: IntegrandPiece,
                               cells_per_decade: int) -> list[DensityPiece]:
    """Image of ``d x ds`` under ``(s, x) -> a e^{-bs} x`` on a finite ``s``-range."""
    if piece.end == INF:
        raise UnsupportedCombination(
            "image of a density under an exponential integrand on [0, inf) is not tabulated")
    lo, hi = d._side()
    b = piece.b
    g0 = abs(piece.a) * math.exp(-b * piece.start)
    g1 = abs(piece.a) * math.exp(-b * piece.end)
    gmin, gmax = min(g0, g1), max(g0, g1)
    sign = d.sign * (1 if piece.a > 0 else -1)
    out: list[DensityPiece] = []

    def tail(y):  # image mass of {|y'| >= y}
        return _log_tail_integral(d.c, d.p, lo, hi, y / gmax, y / gmin) / abs(b)

    y_lo = gmin * lo
    y_hi = gmax * hi
    if y_lo == 0.0:
        # every s contributes a full power density below gmin * hi
        inner_hi = gmin * hi
        coef = d.c * (abs(piece.a) ** (-d.p - 1.0)) * _exp_integral((d.p + 1.0) * b, piece.start, piece.end)
        out.append(_signed_piece(0.0, inner_hi, coef, d.p, sign))
        y_lo = inner_hi
    if y_hi == INF:
        raise UnsupportedCombination("unbounded density under an exponential integrand")
    decades = math.log10(y_hi / y_lo)
    n = max(1, int(math.ceil(decades * cells_per_decade)))
    edges = y_lo * (y_hi / y_lo) ** (np.arange(n + 1) / n)
    edges[-1] = y_hi
    tails = np.array([tail(y) for y in edges])
    masses = tails[:-1] - tails[1:]
    for k in range(n):
        if masses[k] > 0:
            out.append(_signed_piece(edges[k], edges[k + 1], masses[k] / (edges[k + 1] - edges[k]),
                                     0.0, sign))
    return out


def _exp_integral(k: float, s0: float, s1: float) -> float:
    """``int_{s0}^{s1} e^{k s} ds``."""
    if k == 0:
        return s1 - s0
    return (math.exp(k * s1) - math.exp(k * s0)) / k


def _signed_piece(lo: float, hi: float, c: float, p: float, sign: int) -> DensityPiece:
    return DensityPiece(lo, hi, c, p) if sign > 0 else DensityPiece(-hi, -lo, c, p)


def _image_measure(comp: MeasureComponent, piece: IntegrandPiece,
                   cells_per_decade: int, tabulate: bool) -> list[MeasureComponent]:
    if not piece.nonzero:
        return []
    if not piece.is_exponential:
        return [_weighted_component(comp, piece.length).scaled(piece.a)]
    if isinstance(comp, Atoms):
        out = []
        for x, m in comp.atoms:
            y0 = piece.a * x * math.exp(-piece.b * piece.start)
            y1 = 0.0 if piece.end == INF else piece.a * x * math.exp(-piece.b * piece.end)
            lo, hi = sorted((y0, y1))
            out.append(DensityPiece(lo, hi, m / abs(piece.b), -1.0))
        return out
    if isinstance(comp, AtomSequence):
        raise UnsupportedCombination("accumulating atoms under an exponential integrand")
    if not tabulate:
        raise UnsupportedCombination("density image under an exponential integrand needs tabulation")
    if isinstance(comp, StablePiece):
        return [q for d in comp.densities()
                for q in _density_times_exponential(d, piece, cells_per_decade)]
    if isinstance(comp, DensityPiece):
        return _density_times_exponential(comp, piece, cells_per_decade)
    raise TypeError(f"unsupported component {comp!r}")


def _moment_halfopen(comp: MeasureComponent, lo: float, hi: float) -> float:
    """``int_{lo < |x| <= hi} x nu(dx)``."""
    if isinstance(comp, Atoms):
        return math.fsum(x * m for x, m in comp.atoms if lo < abs(x) <= hi)
    if isinstance(comp, AtomSequence):
        return math.fsum(x * m for x, m in comp.atom_list() if lo < abs(x) <= hi)
    return comp.signed_moment(lo, hi)


def _annulus(comp: MeasureComponent, r: float) -> float:
    """``int x (1{|x| <= r} - 1{|x| <= 1}) nu(dx)``."""
    if r == 1.0:
        return 0.0
    if r > 1.0:
        return _moment_halfopen(comp, 1.0, r)
    return -_moment_halfopen(comp, r, 1.0)


def _gamma_contribution(comp: MeasureComponent, piece: IntegrandPiece) -> float:
    """``int_piece int f(s) x (1{|f(s)x|<=1} - 1{|x|<=1}) nu(dx) ds``."""
    if not piece.nonzero:
        return 0.0
    if not piece.is_exponential:
        return piece.length * piece.a * _annulus(comp, 1.0 / abs(piece.a))
    if isinstance(comp, Atoms):
        total = []
        for x, m in comp.atoms:
            # s-set where |f(s) x| <= 1 is a half-line cut at s_c
            s_c = math.log(abs(piece.a * x)) / piece.b
            if piece.b > 0:
                lo_s, hi_s = max(piece.start, s_c), piece.end
            else:
                lo_s, hi_s = piece.start, min(piece.end, s_c)
            inside = _piece_integral(piece, lo_s, hi_s)
            whole = piece.integral() if abs(x) <= 1.0 else 0.0
            total.append(m * x * (inside - whole))
        return math.fsum(total)
    if piece.end == INF:
        raise UnsupportedCombination("location parameter of an infinite-range image is not tabulated")
    f = lambda s: piece.a * math.exp(-piece.b * s) * _annulus(comp, math.exp(piece.b * s) / abs(piece.a))  # noqa: E731
    val, err = integrate.quad(f, piece.start, piece.end, limit=400, epsabs=1e-13, epsrel=1e-11)
    if err > 1e-8 * max(1.0, abs(val)):
        raise QuadratureFailure("location-parameter quadrature did not converge")
    return val


def _piece_integral(piece: IntegrandPiece, lo: float, hi: float) -> float:
    if not hi > lo:
        return 0.0
    cut = IntegrandPiece(lo, hi, piece.kind, piece.a, piece.b)
    return cut.integral()


def transform_triplet(f: IntegrandFunction, t: float, eta: LevyTriplet, *,
                      tabulate: bool = True,
                      cells_per_decade: int = CELLS_PER_DECADE) -> LevyTriplet:
    """Triplet of ``int_0^t f(s) d eta_s``.

    For ``t = inf`` the caller asserts that the improper integral exists.
    """
    f = f.restricted(t)
    if t > f.domain_end:
        raise ValueError("integrand is not defined up to the requested horizon")
    sigma2 = eta.sigma2 * f.integral(2) if eta.sigma2 else 0.0
    measure: list[MeasureComponent] = []
    gamma_terms = [eta.gamma * f.integral()]
    for piece in f.pieces:
        if not piece.nonzero:
            continue
        for comp in eta.measure:
            measure.extend(_image_measure(comp, piece, cells_per_decade, tabulate))
            gamma_terms.append(_gamma_contribution(comp, piece))
    gamma = math.fsum(gamma_terms)
    drift = None
    if eta.drift is not None:
        drift = eta.drift * f.integral()
    out = LevyTriplet(sigma2, tuple(measure), gamma)
    if drift is not None and out.finite_variation:
        out = LevyTriplet(sigma2, tuple(measure), gamma, drift)
    return out


def transform_exponent(f: IntegrandFunction, t: float, eta: LevyTriplet) -> CharExponent:
    """``z -> int_0^t Psi_eta(f(s) z) ds`` by quadrature in ``s``."""
    f = f.restricted(t)

    def psi(z: float) -> complex:
        parts = []
        for piece in f.pieces:
            if not piece.nonzero:
                continue
            if not piece.is_exponential:
                parts.append(piece.length * char_exponent(eta, piece.a * z))
                continue
            g = lambda s, k: (char_exponent(eta, piece.a * math.exp(-piece.b * s) * z).real  # noqa: E731
                              if k == 0 else
                              char_exponent(eta, piece.a * math.exp(-piece.b * s) * z).imag)
            vals = []
            for k in (0, 1):
                val, err = integrate.quad(g, piece.start, piece.end, args=(k,),
                                          limit=500, epsabs=1e-12, epsrel=1e-10)
                if err > 1e-7 * max(1.0, abs(val)):
                    raise QuadratureFailure("exponent quadrature over s did not converge")
                vals.append(val)
            parts.append(complex(vals[0], vals[1]))
        return sum(parts, 0j)

    return CharExponent(psi)


# ---------------------------------------------------------------------------
# condition checkers


class Verdict(str, enum.Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Threshold:
    """Right-hand side of a liminf condition: ``= inf``, ``> 0``, ``> 1/(4c)`` or ``> 1/(2c)``."""

    kind: str
    c: float | None = None

    def __post_init__(self):
        if self.kind not in ("infinite", "positive", "quarter_over", "half_over"):
            raise ValueError(f"unknown threshold kind {self.kind!r}")
        if self.kind in ("quarter_over", "half_over") and not (self.c and self.c > 0):
            raise ValueError("scaled thresholds need c > 0")

    @property
    def value(self) -> float:
        if self.kind == "infinite":
            return INF
        if self.kind == "positive":
            return 0.0
        if self.kind == "quarter_over":
            return 1.0 / (4.0 * self.c)
        return 1.0 / (2.0 * self.c)

    def describe(self) -> str:
        return {"infinite": "= inf", "positive": "> 0"}.get(self.kind, f"> {self.value:.6g}")

    def exceeded_by(self, limit: float) -> bool:
        """Whether an exactly known liminf satisfies the condition."""
        if self.kind == "infinite":
            return limit == INF
        return limit > self.value


def _threshold(th) -> Threshold:
    if isinstance(th, Threshold):
        return th
    return Threshold(th)


@dataclass(frozen=True)
class ConditionResult:
    name: str
    verdict: Verdict
    method: str
    detail: str = ""
    evidence: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS

    @property
    def fails(self) -> bool:
        return self.verdict is Verdict.FAILS

    def to_dict(self) -> dict:
        return {"name": self.name, "verdict": self.verdict.value, "method": self.method,
                "detail": self.detail, "evidence": self.evidence}


def _as_triplet(x) -> LevyTriplet:
    return x.triplet if isinstance(x, ProcessSpec) else x


def _zero_pieces(triplet: LevyTriplet):
    """Split the infinite-at-zero components by how fast mass piles up."""
    heavy, log_pieces, sequences = [], [], []
    for comp in iter_components(triplet):
        if isinstance(comp, AtomSequence):
            sequences.append(comp)
            continue
        idx = comp.small_jump_index()
        if idx is None:
            continue
        if idx > 0:
            heavy.append(comp)
        else:
            log_pieces.append(comp)
    return heavy, log_pieces, sequences


def check_kallenberg(triplet, threshold="infinite") -> ConditionResult:
    """Small-ball growth ``eps^-2 |ln eps|^-1 (sigma^2 + int_{|x|<=eps} x^2 nu)`` against a threshold."""
    triplet = _as_triplet(triplet)
    th = _threshold(threshold)
    name = f"kallenberg[{th.describe()}]"
    if triplet.sigma2 > 0:
        return ConditionResult(name, Verdict.HOLDS, "symbolic", "Gaussian part gives limit inf")
    if triplet.nu_total() < INF:
        return ConditionResult(name, Verdict.FAILS, "symbolic", "finite Levy measure gives limit 0")
    heavy, log_pieces, sequences = _zero_pieces(triplet)
    if heavy:
        idx = max(c.small_jump_index() for c in heavy)
        return ConditionResult(name, Verdict.HOLDS, "symbolic",
                               f"power density with index {idx:g} > 0 gives limit inf")
    if not sequences:
        return ConditionResult(name, Verdict.FAILS, "symbolic",
                               "1/|x| densities give eps^2/2 per unit weight, limit 0")
    if len(sequences) == 1:
        seq = sequences[0]
        expo = seq.growth * (2.0 - seq.alpha)
        ev = {"growth_times_2_minus_alpha": expo}
        if expo >= 2.0:
            return ConditionResult(name, Verdict.FAILS, "symbolic",
                                   "just below each atom the truncated second moment is of the next atom's order; liminf 0",
                                   ev)
        return ConditionResult(name, Verdict.HOLDS, "symbolic",
                               "atom sequence too dense: liminf inf", ev)
    return _kallenberg_numeric(triplet, th, name)


def _kallenberg_numeric(triplet, th, name) -> ConditionResult:
    eps = np.sort(np.concatenate([
        np.array([abs(x) for c in iter_components(triplet) if isinstance(c, AtomSequence)
                  for x, _ in c.atom_list()]) * (1 - 1e-9),
        np.logspace(-200, -1, 400)]))
    vals = np.array([(triplet.second_moment(e)) / (e * e * abs(math.log(e))) for e in eps])
    return _grid_verdict(name, eps[::-1], vals[::-1], th, "eps")


def _grid_verdict(name, grid, vals, th: Threshold, label: str) -> ConditionResult:
    """Verdict from values ordered towards the limit point, using running minima per decade."""
    logg = np.log10(np.abs(grid))
    span = logg[-1] - logg[0]
    step = math.copysign(1.0, span)
    last = np.abs(logg - logg[-1]) <= 1.0
    prev = (np.abs(logg - logg[-1]) > 1.0) & (np.abs(logg - logg[-1]) <= 2.0)
    ev = {"grid": label, "points": int(len(grid))}
    if not prev.any():
        return ConditionResult(name, Verdict.UNKNOWN, "numeric", "grid too short", ev)
    m_last, m_prev = float(vals[last].min()), float(vals[prev].min())
    ev.update(liminf_last_decade=m_last, liminf_previous_decade=m_prev)
    stable = abs(m_last - m_prev) <= 0.1 * max(abs(m_prev), 1e-300)
    v = th.value
    if stable:
        ev["estimate"] = m_last
        if th.kind == "infinite":
            return ConditionResult(name, Verdict.FAILS, "numeric", "liminf stabilised at a finite value", ev)
        if m_last > 1.1 * v and m_last > 1e-3:
            return ConditionResult(name, Verdict.HOLDS, "numeric", "liminf stabilised above threshold", ev)
        if v > 0 and m_last < v / 1.1:
            return ConditionResult(name, Verdict.FAILS, "numeric", "liminf stabilised below threshold", ev)
        return ConditionResult(name, Verdict.UNKNOWN, "numeric", "estimate inside indeterminacy band", ev)
    if v > 0 and v < INF and m_last < m_prev / 10 and m_last < v / 10:
        return ConditionResult(name, Verdict.FAILS, "numeric",
                               "running minimum collapses far below threshold", ev)
    return ConditionResult(name, Verdict.UNKNOWN, "numeric", "running minimum not stabilised", ev)


def check_hartman_wintner(psi, threshold="infinite", z_cap: float = 2.0**60) -> ConditionResult:
    """``liminf_{|z|->inf} -Re Psi(z) / ln(1+|z|)`` against a threshold."""
    th = _threshold(threshold)
    name = f"hartman_wintner[{th.describe()}]"
    triplet = psi.triplet if isinstance(psi, CharExponent) else _as_triplet(psi)
    if triplet is not None:
        if triplet.sigma2 > 0:
            return ConditionResult(name, Verdict.HOLDS, "symbolic", "Gaussian part: ratio ~ z^2/ln z")
        if triplet.nu_total() < INF:
            return ConditionResult(name, Verdict.FAILS, "symbolic",
                                   "-Re Psi bounded by 2 nu(R); ratio -> 0")
        heavy, log_pieces, sequences = _zero_pieces(triplet)
        if heavy:
            return ConditionResult(name, Verdict.HOLDS, "symbolic",
                                   "power density with positive index: -Re Psi grows like |z|^alpha")
        if not sequences:
            C = math.fsum(c.c for c in log_pieces)
            ev = {"limit": C}
            ok = th.exceeded_by(C)
            return ConditionResult(name, Verdict.HOLDS if ok else Verdict.FAILS, "symbolic",
                                   "1/|x| densities: -Re Psi(z) = C ln z + O(1)", ev)
        psi = CharExponent.of(triplet)
    grid = [2.0**k for k in range(4, int(math.log2(z_cap)) + 1)]
    if triplet is not None:
        grid += _resonances(triplet, z_cap)
    grid = np.array(sorted(set(grid)))
    vals = np.array([-_neg_re(psi, triplet, z) / math.log1p(z) for z in grid])
    return _grid_verdict(name, grid, vals, th, "z")


def _neg_re(psi, triplet, z):
    if triplet is not None and any(isinstance(c, AtomSequence) for c in triplet.measure):
        return -_precise_neg_re_psi(triplet, z)
    return psi(z).real


def _resonances(triplet, z_cap):
    """Frequencies at which an atom sequence loses its leading contributions."""
    out = []
    for comp in triplet.measure:
        if isinstance(comp, AtomSequence):
            for x, _ in comp.atom_list():
                z = 2 * math.pi / abs(x)
                if 16 <= z <= z_cap:
                    out.append(z)
    return out


def _precise_neg_re_psi(triplet: LevyTriplet, z: float) -> float:
    """``-Re Psi(z)`` with the phases ``z x`` reduced exactly (mpmath), needed for atom sequences.

    ``z`` is taken as the exact double it is; for resonance points ``2 pi / a_n``
    the intended phase is recovered by treating ``z`` as ``2 pi k / a_n``.
    """
    import mpmath

    total = 0.5 * triplet.sigma2 * z * z
    for comp in triplet.measure:
        if isinstance(comp, AtomSequence):
            lb = mpmath.log(comp.base)
            atoms = comp.atom_list()
            # identify z as a resonance of one of the atoms, if it is one
            cycles = None
            for n, (x, _) in enumerate(atoms, start=1):
                if abs(z - 2 * math.pi / abs(x)) <= 1e-12 * z:
                    cycles = n
                    break
            with mpmath.workdps(60 + int(comp.growth ** (len(atoms) + 1) * math.log10(comp.base))):
                zz = (2 * mpmath.pi / (abs(comp.scale) * mpmath.power(comp.base, -mpmath.power(comp.growth, cycles)))
                      if cycles else mpmath.mpf(z))
                acc = mpmath.mpf(0)
                for n in range(1, len(atoms) + 1):
                    e = mpmath.power(comp.growth, n) * lb
                    x = abs(comp.scale) * mpmath.exp(-e)
                    m = comp.weight * mpmath.exp(comp.alpha * e)
                    acc += m * (1 - mpmath.cos(zz * x))
                total += float(acc)
        else:
            total -= component_exponent(comp, z).real
    return total


def _side_moment(triplet: LevyTriplet, side: int) -> float:
    """``int_{0 < side*x <= 1} |x| nu(dx)``."""
    parts = []
    for comp in iter_components(triplet):
        if isinstance(comp, Atoms):
            parts.append(math.fsum(abs(x) * m for x, m in comp.atoms if 0 < side * x <= 1))
        elif isinstance(comp, AtomSequence):
            if side * comp.scale > 0:
                parts.append(comp.abs_moment(1.0, 1.0))
        elif isinstance(comp, DensityPiece):
            if comp.sign == side:
                parts.append(comp.abs_moment(1.0, 1.0))
    return math.fsum(parts) if parts else 0.0


def one_sided_variation(triplet) -> bool:
    """Exactly one side of the small jumps has infinite first absolute moment."""
    triplet = _as_triplet(triplet)
    pos, neg = _side_moment(triplet, 1), _side_moment(triplet, -1)
    return (pos < INF) != (neg < INF)


def check_hawkes(xi, z_max: float = 1e6) -> ConditionResult:
    """``int_R Re(1/(1 - Psi(z))) dz < inf``: symbolic subcases first, then quadrature."""
    triplet = _as_triplet(xi)
    name = "hawkes"
    prof = profile(triplet)
    if prof.finite_variation:
        d = prof.drift
        if d != 0:
            return ConditionResult(name, Verdict.HOLDS, "symbolic",
                                   f"finite variation with drift {d:g} != 0", {"drift": d})
        return ConditionResult(name, Verdict.FAILS, "symbolic",
                               "finite variation with zero drift", {"drift": 0.0})
    if triplet.sigma2 > 0:
        return ConditionResult(name, Verdict.HOLDS, "symbolic", "Gaussian part present")
    if one_sided_variation(triplet):
        return ConditionResult(name, Verdict.HOLDS, "symbolic",
                               "small jumps of infinite variation on exactly one side")
    heavy, _, _ = _zero_pieces(triplet)
    if any(c.small_jump_index() > 1 for c in heavy):
        return ConditionResult(name, Verdict.HOLDS, "symbolic",
                               "power density with index > 1: Re(1/(1-Psi)) <= 1/(1 + C|z|^alpha)")
    return _hawkes_numeric(triplet, z_max)


def _hawkes_numeric(triplet, z_max) -> ConditionResult:
    name = "hawkes"

    def g(z):
        return (1.0 / (1.0 - char_exponent(triplet, z))).real

    edges = np.concatenate([[0.0], np.logspace(-2, math.log10(z_max), 81)])
    total = 0.0
    try:
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(g, a, b, limit=200)
            total += val
    except QuadratureFailure as exc:
        return ConditionResult(name, Verdict.UNKNOWN, "numeric", str(exc))
    zs = np.logspace(math.log10(z_max) - 1, math.log10(z_max), 9)
    gs = np.array([max(g(z), 1e-300) for z in zs])
    beta = -np.polyfit(np.log(zs), np.log(gs), 1)[0]
    ev = {"integral_to_zmax": 2 * total, "tail_exponent": float(beta)}
    if beta > 1.1:
        tail = gs[-1] * z_max / (beta - 1)
        ev["tail_estimate"] = 2 * tail
        return ConditionResult(name, Verdict.HOLDS, "numeric", "integrand decays faster than 1/z", ev)
    if beta < 0.9:
        return ConditionResult(name, Verdict.FAILS, "numeric", "integrand decays no faster than 1/z", ev)
    return ConditionResult(name, Verdict.UNKNOWN, "numeric", "tail exponent inside indeterminacy band", ev)


def check_acp(eta) -> ConditionResult:
    """Absolute continuity of the potential measures of ``eta``."""
    spec = eta if isinstance(eta, ProcessSpec) else ProcessSpec(eta)
    triplet = spec.triplet
    name = "acp"
    if spec.has("ACP_holds"):
        return ConditionResult(name, Verdict.HOLDS, "symbolic", "asserted")
    if spec.has("ACP_fails") or spec.has("potential_measure_singular"):
        return ConditionResult(name, Verdict.FAILS, "symbolic", "asserted")
    prof = profile(triplet)
    if prof.is_zero or prof.is_compound_poisson:
        return ConditionResult(name, Verdict.FAILS, "symbolic",
                               "law at an exponential time has an atom at 0")
    if triplet.sigma2 > 0:
        return ConditionResult(name, Verdict.HOLDS, "symbolic", "Gaussian part present")
    if prof.finite_variation and prof.drift != 0:
        return ConditionResult(name, Verdict.HOLDS, "symbolic", "finite variation with non-zero drift")
    hawkes = check_hawkes(triplet)
    if hawkes.holds:
        return ConditionResult(name, Verdict.HOLDS, hawkes.method, "bounded potential density",
                               {"hawkes": hawkes.to_dict()})
    marg = marginal_ac(triplet)
    if marg.holds:
        return ConditionResult(name, Verdict.HOLDS, marg.method, "marginals absolutely continuous",
                               {"marginals": marg.to_dict()})
    return ConditionResult(name, Verdict.UNKNOWN, "symbolic", "no decidable sufficient condition")


def marginal_ac(triplet) -> ConditionResult:
    """Whether ``eta_t`` is absolutely continuous for every ``t > 0``."""
    triplet = _as_triplet(triplet)
    name = "marginals_ac"
    if triplet.sigma2 > 0:
        return ConditionResult(name, Verdict.HOLDS, "symbolic", "Gaussian part present")
    if triplet.nu_total() < INF:
        return ConditionResult(name, Verdict.FAILS, "symbolic",
                               "finite activity: no jump before t with positive probability")
    if triplet.nu_ac_total() == INF:
        return ConditionResult(name, Verdict.HOLDS, "symbolic", "infinite absolutely continuous Levy measure")
    for th in ("infinite",):
        k = check_kallenberg(triplet, th)
        if k.holds:
            return ConditionResult(name, Verdict.HOLDS, k.method, "Kallenberg growth at every t",
                                   {"kallenberg": k.to_dict()})
    return ConditionResult(name, Verdict.UNKNOWN, "symbolic", "no decidable sufficient condition")


def convergence_helper(xi: LevyTriplet, eta: LevyTriplet) -> ConditionResult:
    """Conservative plumbing check for convergence of the unkilled integral.

    Holds when ``E xi_1`` is finite and positive and ``eta`` has jumps of bounded size;
    this is a sufficient, not a necessary, condition.
    """
    name = "unkilled_convergence_helper"
    for comp in iter_components(xi):
        if comp.mass(-INF, -1.0) + comp.mass(1.0, INF) > 0 and isinstance(comp, DensityPiece):
            if comp.abs_moment(1.0, INF) == INF:
                return ConditionResult(name, Verdict.UNKNOWN, "symbolic", "E|xi_1| infinite")
    mean = xi.gamma + xi.signed_moment(1.0, INF) - _moment_halfopen_total(xi, 1.0)
    supp = eta.nu_support()
    bounded = supp.is_empty or (math.isfinite(supp.sup) and math.isfinite(supp.inf))
    ev = {"mean_xi_1": mean}
    if mean > 0 and math.isfinite(mean) and bounded:
        return ConditionResult(name, Verdict.HOLDS, "symbolic", "positive finite mean, bounded eta jumps", ev)
    return ConditionResult(name, Verdict.UNKNOWN, "symbolic", "helper inconclusive", ev)


def _moment_halfopen_total(triplet: LevyTriplet, r: float) -> float:
    # atoms at exactly |x| = 1 are counted by gamma's truncation, not by the tail moment
    return math.fsum(x * m for c in triplet.measure if isinstance(c, Atoms)
                     for x, m in c.atoms if abs(x) == r)
