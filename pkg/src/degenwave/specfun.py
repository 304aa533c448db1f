"""Complex Gamma and Bessel J functions, plus positive real zeros of J.

Bessel values come from the ascending power series below a crossover radius
and from the Hankel large-argument expansion above it.  The series is summed
in extended precision (``np.clongdouble``) because its terms grow like
``I_nu(|z|)`` while ``J_nu`` stays O(|z|^-1/2) near the real axis.

``bessel_j_reduced`` returns ``J_nu(z) / z**nu``, which is an even entire
function of ``z``.  Products of Bessel factors whose zero set is all that
matters are best assembled from it, since it has no branch cut.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

__all__ = [
    "BesselEval",
    "SpecialFunctionError",
    "gamma",
    "bessel_j",
    "bessel_j_eval",
    "bessel_j_reduced",
    "bessel_j_prime",
    "bessel_zero",
    "crossover_radius",
    "hankel_asymptotic",
    "power_series",
]


class SpecialFunctionError(ValueError):
    """Raised on poles, branch cuts, singular arguments or non-convergence."""


# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def gamma(z: complex) -> complex:
    """Gamma function for complex ``z`` (Lanczos, reflection for Re z < 1/2)."""
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real):
        raise SpecialFunctionError(f"Gamma has a pole at z = {z.real:g}")
    if z.real < 0.5:
        return math.pi / (cmath.sin(math.pi * z) * gamma(1.0 - z))
    z -= 1.0
    x = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        x += _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return cmath.exp(_HALF_LOG_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(x))


def _rgamma(x: float) -> float:
    """1/Gamma(x) for real x, zero at the poles."""
    if x <= 0.0 and x == math.floor(x):
        return 0.0
    return 1.0 / gamma(x).real


def crossover_radius(nu: float) -> float:
    """|z| above which the Hankel expansion replaces the power series.

    A flat radius of 16 balances long-double cancellation in the series
    (grows with the radius) against the optimally truncated asymptotic
    remainder (shrinks with it).  Measured against 30-digit references,
    both branches stay within 1e-13 of the envelope at the switch for
    ``0 <= nu <= 3``.  ``nu`` is kept in the signature for callers.
    """
    return 16.0


# ---------------------------------------------------------------------------
# series branch


def power_series(nu: float, z: complex) -> complex:
    """``J_nu(z) / z**nu`` from the ascending series, summed in long double."""
    if nu <= -1.0 and nu == math.floor(nu):
        raise SpecialFunctionError("series requires nu > -1 (use the integer-order identity)")
    zz = np.clongdouble(complex(z))
    w = -(zz * zz) / np.longdouble(4)
    term = np.clongdouble(_rgamma(nu + 1.0) * 2.0 ** (-nu))
    total = term
    nu_ld = np.longdouble(nu)
    tiny = np.longdouble(1e-21)
    m_min = abs(complex(z)) / 2.0 + 2.0
    m = 0
    while True:
        m += 1
        term = term * w / (np.longdouble(m) * (np.longdouble(m) + nu_ld))
        total = total + term
        if m > m_min and abs(term) <= tiny * abs(total):
            break
        if m > 2000:
            raise SpecialFunctionError("power series did not converge")
    return complex(total)


# ---------------------------------------------------------------------------
# asymptotic branch


def _cospi(x: float) -> float:
    """``cos(pi x)``, exact at multiples of one half."""
    r = math.fmod(abs(x), 2.0)
    if r in (0.5, 1.5):
        return 0.0
    return math.cos(math.pi * r)


def _sinpi(x: float) -> float:
    """``sin(pi x)``, exact at multiples of one half."""
    r = math.fmod(x, 2.0)
    if r in (0.0, 1.0, -1.0):
        return 0.0
    return math.sin(math.pi * r)


def hankel_asymptotic(nu: float, z: complex, terms: int | None = None) -> complex:
    """Large-argument expansion of ``J_nu(z)`` for Re z >= 0.

    ``terms`` counts the coefficients a_0, a_1, ... that are kept; ``terms=3``
    is the classical three-term form.  ``None`` truncates optimally (stop at
    the smallest term).
    """
    z = complex(z)
    if z.real < 0.0:
        raise SpecialFunctionError("hankel_asymptotic expects Re z >= 0")
    if z == 0:
        raise SpecialFunctionError("asymptotic expansion undefined at z = 0")
    mu = 4.0 * nu * nu
    p = 0j
    q = 0j
    a = 1.0 + 0j  # a_k / z**k
    kmax = 200 if terms is None else terms
    prev = math.inf
    for k in range(kmax):
        if k > 0:
            a = a * (mu - (2 * k - 1) ** 2) / (8.0 * k * z)
        size = abs(a)
        if terms is None:
            if size == 0.0:
                break
            if size > prev:
                break
            prev = size
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p += sign * a
        else:
            q += sign * a
        if terms is None and size < 1e-17 * abs(p):
            break
    # cos and sin of z - c pi by angle addition, so the shift adds no rounding
    c = 0.5 * nu + 0.25
    cc, sc = _cospi(c), _sinpi(c)
    try:
        cz, sz = cmath.cos(z), cmath.sin(z)
        cos_chi, sin_chi = cz * cc + sz * sc, sz * cc - cz * sc
        return cmath.sqrt(2.0 / (math.pi * z)) * (p * cos_chi - q * sin_chi)
    except OverflowError:
        raise SpecialFunctionError(f"J_nu overflows double range at |Im z| = {abs(z.imag):.4g}") from None


# ---------------------------------------------------------------------------
# public evaluators


@dataclass(frozen=True)
class BesselEval:
    """One evaluation of J_nu together with the branch that produced it."""

    order: float
    argument: complex
    value: complex
    method: Literal["series", "asymptotic", "recurrence"]


def _is_integer(nu: float) -> bool:
    return nu == math.floor(nu)


_RECURRENCE_ORDER = 2.0


def _right_half(nu: float, z: complex) -> tuple[complex, str]:
    """``J_nu(z)`` for ``Re z >= 0`` beyond the series radius.

    The Hankel expansion needs ``|z| >> nu**2``.  Larger orders use the
    series while ``|z| <= nu`` and otherwise climb from the orders
    ``nu - floor(nu)`` and one above by forward recurrence, which is
    stable while the order stays below ``|z|``.
    """
    if nu <= _RECURRENCE_ORDER:
        return hankel_asymptotic(nu, z), "asymptotic"
    if abs(z) <= nu:
        return power_series(nu, z) * z**nu, "series"
    n = int(math.floor(nu))
    mu = nu - n
    prev, cur = hankel_asymptotic(mu, z), hankel_asymptotic(mu + 1.0, z)
    for j in range(1, n):
        prev, cur = cur, (2.0 * (mu + j) / z) * cur - prev
    return cur, "recurrence"


def bessel_j_eval(nu: float, z: complex) -> BesselEval:
    """Evaluate ``J_nu(z)`` on the principal branch, recording the method."""
    nu = float(nu)
    z = complex(z)
    if nu < -1.0:
        raise SpecialFunctionError("order must satisfy nu >= -1")
    if nu == -1.0:
        inner = bessel_j_eval(1.0, z)
        return BesselEval(nu, z, -inner.value, inner.method)
    if z.imag == 0.0 and z.real < 0.0:
        if not _is_integer(nu):
            raise SpecialFunctionError("J_nu(z) has a branch cut on arg z = pi")
        inner = bessel_j_eval(nu, -z)
        sign = -1.0 if int(nu) % 2 else 1.0
        return BesselEval(nu, z, sign * inner.value, inner.method)
    if z == 0:
        value = 1.0 + 0j if nu == 0.0 else 0j
        return BesselEval(nu, z, value, "series")
    # at |nu| = 1/2 every correction term vanishes and the expansion is exact
    if abs(z) < crossover_radius(nu) and 4.0 * nu * nu != 1.0:
        value = power_series(nu, z) * z**nu
        return BesselEval(nu, z, value, "series")
    if z.real >= 0.0:
        value, method = _right_half(nu, z)
        return BesselEval(nu, z, value, method)
    # J_nu(z) = exp(+-i nu pi) J_nu(-z) with -z in the right half plane.
    phase = cmath.exp(1j * math.pi * nu) if z.imag > 0 else cmath.exp(-1j * math.pi * nu)
    value, method = _right_half(nu, -z)
    return BesselEval(nu, z, phase * value, method)


def bessel_j(nu: float, z: complex) -> complex:
    """Bessel function of the first kind ``J_nu(z)``, principal branch."""
    return bessel_j_eval(nu, z).value


def bessel_j_reduced(nu: float, z: complex) -> complex:
    """``J_nu(z) / z**nu``: even and entire in ``z``, so free of branch cuts.

    For large ``|z|`` the representative with Re z >= 0 is used.
    """
    nu = float(nu)
    z = complex(z)
    if nu <= -1.0:
        raise SpecialFunctionError("reduced form requires nu > -1")
    if abs(z) < crossover_radius(nu):
        return power_series(nu, z)
    if z.real < 0.0 or (z.real == 0.0 and z.imag < 0.0):
        z = -z
    return _right_half(nu, z)[0] / z**nu


def bessel_j_prime(nu: float, z: complex) -> complex:
    """Derivative ``J'_nu(z) = (nu/z) J_nu(z) - J_{nu+1}(z)``."""
    z = complex(z)
    if z == 0:
        raise SpecialFunctionError("J'_nu is evaluated through nu/z; z = 0 is singular")
    return (nu / z) * bessel_j(nu, z) - bessel_j(nu + 1.0, z)


def _mcmahon(nu: float, k: int) -> float:
    b = (k + 0.5 * nu - 0.25) * math.pi
    mu = 4.0 * nu * nu
    return (
        b
        - (mu - 1.0) / (8.0 * b)
        - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * (8.0 * b) ** 3)
    )


def _jr(nu: float, x: float) -> float:
    return bessel_j(nu, x).real


def bessel_zero(nu: float, k: int, max_iter: int = 100) -> float:
    """k-th positive zero ``j_{nu,k}`` of ``J_nu`` (nu >= 0, k >= 1).

    McMahon guess (``nu < 2``) or a unit-step sign-change scan from ``nu``
    (larger orders), then Newton safeguarded by bisection on the bracket.
    """
    if nu < 0.0:
        raise SpecialFunctionError("bessel_zero requires nu >= 0")
    if k < 1 or int(k) != k:
        raise SpecialFunctionError("zero index k must be a positive integer")
    if nu < 2.0:
        guess = _mcmahon(nu, k)
        lo = max(guess - 1.0, 1e-8 + (nu if k == 1 else 0.0))
        hi = guess + 1.0
        flo, fhi = _jr(nu, lo), _jr(nu, hi)
        widen = 0
        while flo * fhi > 0.0:
            widen += 1
            if widen > 20:
                raise SpecialFunctionError(f"could not bracket zero {k} of J_{nu}")
            lo = max(lo - 0.25, 1e-8)
            hi = hi + 0.25
            flo, fhi = _jr(nu, lo), _jr(nu, hi)
    else:
        # No zeros below nu and consecutive zeros are more than 3 apart:
        # unit steps from nu meet each sign change exactly once.
        lo, flo, seen = float(nu), _jr(nu, float(nu)), 0
        while True:
            hi = lo + 1.0
            fhi = _jr(nu, hi)
            if flo * fhi <= 0.0:
                seen += 1
                if seen == k:
                    break
            lo, flo = hi, fhi
        guess = 0.5 * (lo + hi)
    x = min(max(guess, lo), hi)
    for _ in range(max_iter):
        fx = _jr(nu, x)
        if fx == 0.0:
            return x
        if fx * flo > 0.0:
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        dfx = bessel_j_prime(nu, x).real
        x_new = x - fx / dfx if dfx != 0.0 else 0.5 * (lo + hi)
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 2e-15 * abs(x):
            if abs(_jr(nu, x_new)) <= 1e-12 * max(1.0, abs(dfx)):
                return x_new
            break
        x = x_new
    raise SpecialFunctionError(f"Newton iteration for j_({nu},{k}) did not converge")
