"""Oscillatory power integrals used by the characteristic-exponent evaluator.

Everything here works on the positive half-line after the substitution
``u = |z| x``.  Pieces below ``u = 1`` are summed as Taylor series term by
term (each term is an exact power integral); pieces above use QUADPACK's
Fourier-weighted rules, which cope with arbitrarily many oscillations.
"""

from __future__ import annotations

import math

from scipy import integrate

from .errors import QuadratureFailure
from .model import INF, power_integral

_SERIES_TERMS = 24


def _series_cos_m1(p: float, a: float, b: float) -> float:
    """``int_a^b (cos u - 1) u**p du`` for ``0 <= a <= b <= 1``."""
    total = 0.0
    fact = 1.0
    for k in range(1, _SERIES_TERMS):
        fact *= (2 * k - 1) * (2 * k)
        term = power_integral(p + 2 * k, a, b) / fact
        total += -term if k % 2 else term
        if term < 1e-18 * max(abs(total), 1e-300):
            break
    return total


def _series_sin(p: float, a: float, b: float, subtract_linear: bool) -> float:
    """``int_a^b (sin u - [u]) u**p du`` for ``0 <= a <= b <= 1``."""
    total = 0.0 if subtract_linear else power_integral(p + 1, a, b)
    fact = 1.0
    for k in range(1, _SERIES_TERMS):
        fact *= (2 * k) * (2 * k + 1)
        term = power_integral(p + 2 * k + 1, a, b) / fact
        total += -term if k % 2 else term
        if term < 1e-18 * max(abs(total), 1e-300):
            break
    return total


def _weighted(p: float, a: float, b: float, weight: str, rtol: float) -> float:
    """``int_a^b u**p cos(u) du`` (or sin) for ``1 <= a < b <= inf``."""
    if not b > a:
        return 0.0
    f = lambda u: u**p  # noqa: E731
    if b == INF:
        val, err = integrate.quad(f, a, INF, weight=weight, wvar=1.0, limlst=200,
                                  epsabs=1e-13)
    else:
        val, err = integrate.quad(f, a, b, weight=weight, wvar=1.0, limit=2000,
                                  epsabs=1e-13, epsrel=1e-12)
    if not math.isfinite(val) or err > rtol * max(1.0, abs(val)):
        raise QuadratureFailure(
            f"oscillatory integral of u^{p} on [{a}, {b}] did not converge (err={err:.3g})"
        )
    return val


def cos_part(p: float, A: float, B: float, rtol: float = 1e-8) -> float:
    """``int_A^B (cos u - 1) u**p du``."""
    if not B > A:
        return 0.0
    out = 0.0
    if A < 1.0:
        out += _series_cos_m1(p, A, min(B, 1.0))
    lo = max(A, 1.0)
    if B > lo:
        out += _weighted(p, lo, B, "cos", rtol) - power_integral(p, lo, B)
    return out


def sin_part(p: float, A: float, B: float, w: float, rtol: float = 1e-8) -> float:
    """``int_A^B (sin u - u 1{u <= w}) u**p du``."""
    if not B > A:
        return 0.0
    out = 0.0
    # region where the compensator is active
    a1, b1 = A, min(B, w)
    if b1 > a1:
        if a1 < 1.0:
            out += _series_sin(p, a1, min(b1, 1.0), True)
        lo = max(a1, 1.0)
        if b1 > lo:
            out += _weighted(p, lo, b1, "sin", rtol) - power_integral(p + 1, lo, b1)
    a2, b2 = max(A, w), B
    if b2 > a2:
        if a2 < 1.0:
            out += _series_sin(p, a2, min(b2, 1.0), False)
        lo = max(a2, 1.0)
        if b2 > lo:
            out += _weighted(p, lo, b2, "sin", rtol)
    return out


def density_exponent(c: float, p: float, lo: float, hi: float, sign: int, z: float) -> complex:
    """Contribution of ``c |x|**p`` on ``sign * (lo, hi)`` to the exponent at ``z``."""
    if z == 0:
        return 0j
    w = abs(z)
    scale = c * w ** (-p - 1.0)
    re = scale * cos_part(p, w * lo, w * hi)
    im = scale * sin_part(p, w * lo, w * hi, w)
    im *= sign
    if z < 0:
        im = -im
    return complex(re, im)
