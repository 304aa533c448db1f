"""Problem configuration, degeneracy measure, Poincare constant and condition (C).

The coefficient ``a`` is positive on (0, 1] and may vanish at 0.  Its
degeneracy ``m_a = sup x |a'(x)| / a(x)`` selects the boundary condition at
``x = 0``: Dirichlet for ``m_a < 1`` and the weighted Neumann condition
``(a u_x)(0) = 0`` for ``1 <= m_a < 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy import integrate

from .fracdiff import FractionalKernel
from .specfun import bessel_zero

__all__ = [
    "DegeneracyError",
    "DivergenceError",
    "Regime",
    "DegeneracyProfile",
    "ProblemConfig",
    "Violation",
    "ConditionCReport",
    "measure_degeneracy",
    "poincare_constant",
    "hardy_constant",
    "validate",
    "check_condition_C",
    "nu_gamma",
    "M_A_SAMPLES",
]

M_A_SAMPLES = 20001


class DegeneracyError(ValueError):
    """m_a >= 2: outside the admissible class."""


class DivergenceError(ValueError):
    """The integral of 1/a diverges (m_a >= 1)."""


class Regime(str, Enum):
    DIRICHLET_AT_0 = "dirichlet_at_0"
    WEIGHTED_NEUMANN_AT_0 = "weighted_neumann_at_0"


def _log_grid(n: int = M_A_SAMPLES) -> np.ndarray:
    return np.logspace(-12.0, 0.0, n)


@dataclass(frozen=True)
class DegeneracyProfile:
    """The coefficient ``a`` of the principal part.

    Use the constructors :meth:`power`, :meth:`oscillating` and
    :meth:`tabulated` rather than the raw fields.
    """

    kind: str
    gamma: float | None = None
    a_func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False, repr=False)
    da_func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False, repr=False)
    params: tuple = ()

    @classmethod
    def power(cls, gamma: float) -> "DegeneracyProfile":
        """``a(x) = x**gamma``."""
        gamma = float(gamma)
        if gamma < 0.0:
            raise ValueError("gamma must be nonnegative")
        return cls(kind="power", gamma=gamma, params=(("gamma", gamma),))

    @classmethod
    def oscillating(cls, varpi: float, theta: float) -> "DegeneracyProfile":
        """``a(x) = x**varpi * (1 + cos(theta ln x)**2)``."""

        def a(x):
            x = np.asarray(x, dtype=float)
            return x**varpi * (1.0 + np.cos(theta * np.log(x)) ** 2)

        def da(x):
            x = np.asarray(x, dtype=float)
            c = np.cos(theta * np.log(x))
            s = np.sin(theta * np.log(x))
            return x ** (varpi - 1.0) * (varpi * (1.0 + c**2) - 2.0 * theta * c * s)

        return cls(kind="tabulated", a_func=a, da_func=da,
                   params=(("name", "oscillating"), ("varpi", varpi), ("theta", theta)))

    @classmethod
    def tabulated(cls, x, a, da) -> "DegeneracyProfile":
        """Profile from samples of ``a`` and ``a'`` on (0, 1], interpolated in log-log scale.

        Outside the sampled range the end behaviour is extrapolated as a power law.
        """
        x = np.asarray(x, dtype=float)
        a = np.asarray(a, dtype=float)
        da = np.asarray(da, dtype=float)
        if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0) or x[0] <= 0 or x[-1] > 1:
            raise ValueError("x must be increasing samples in (0, 1]")
        if np.any(a <= 0):
            raise ValueError("a must be positive on (0, 1]")
        lx, la = np.log(x), np.log(a)
        ratio = x * da / a  # logarithmic slope
        lead = ratio[0]

        def a_func(xx):
            lxx = np.log(np.asarray(xx, dtype=float))
            inside = np.interp(lxx, lx, la)
            below = la[0] + lead * (lxx - lx[0])
            return np.exp(np.where(lxx < lx[0], below, inside))

        def da_func(xx):
            xx = np.asarray(xx, dtype=float)
            slope = np.interp(np.log(xx), lx, ratio)
            return slope * a_func(xx) / xx

        return cls(kind="tabulated", a_func=a_func, da_func=da_func,
                   params=(("name", "samples"), ("count", int(x.size))))

    def a(self, x):
        if self.kind == "power":
            return np.asarray(x, dtype=float) ** self.gamma
        return self.a_func(x)

    def da(self, x):
        if self.kind == "power":
            x = np.asarray(x, dtype=float)
            if self.gamma == 0.0:
                return np.zeros_like(x)
            return self.gamma * x ** (self.gamma - 1.0)
        return self.da_func(x)

    @property
    def m_a(self) -> float:
        return measure_degeneracy(self)

    @property
    def is_power(self) -> bool:
        return self.kind == "power"

    def describe(self) -> dict:
        return {"kind": self.kind, **dict(self.params)}


def measure_degeneracy(profile: DegeneracyProfile) -> float:
    """``m_a = sup_{0<x<=1} x |a'(x)| / a(x)``.

    Exact for power profiles, otherwise a supremum over a dense log grid.

    Raises
    ------
    DegeneracyError
        If ``m_a >= 2``.
    """
    if profile.kind == "power":
        m = profile.gamma
    else:
        x = _log_grid()
        m = float(np.max(x * np.abs(profile.da(x)) / profile.a(x)))
    if m >= 2.0:
        raise DegeneracyError(f"m_a = {m:.6g} is not below 2")
    return m


def _log_substituted(profile: DegeneracyProfile, power: int, rate: float) -> float:
    """``int_0^1 s**(power-1) / a(s) ds`` as ``int_0^inf exp(-power y) / a(exp(-y)) dy``.

    The integrand decays like ``exp(-rate y)``.  Integration stops before
    ``a`` underflows and the tail is added through that rate.
    """
    y_max = 700.0
    while y_max > 10.0 and not float(profile.a(math.exp(-y_max))) > 1e-280:
        y_max -= 10.0

    def integrand(y):
        return math.exp(-power * y) / float(profile.a(math.exp(-y)))

    value, _ = integrate.quad(integrand, 0.0, y_max, limit=400, epsabs=1e-13, epsrel=1e-12)
    return value + integrand(y_max) / rate


def poincare_constant(profile: DegeneracyProfile) -> float:
    """``C* = int_0^1 ds / a(s)``, the constant in ``||u||^2 <= C* int a |u'|^2``.

    Closed form ``1 / (1 - gamma)`` for powers.  Otherwise ``s = exp(-y)``
    turns the endpoint singularity into the decaying integrand
    ``exp(-y) / a(exp(-y))``, integrated on ``[0, 700]`` with the remaining
    tail bounded through the rate ``1 - m_a``.

    Raises
    ------
    DivergenceError
        If ``m_a >= 1``.
    """
    m = measure_degeneracy(profile)
    if m >= 1.0:
        raise DivergenceError(f"int 1/a diverges for m_a = {m:.6g} >= 1")
    if profile.kind == "power":
        return 1.0 / (1.0 - m)
    return _log_substituted(profile, 1, 1.0 - m)


def hardy_constant(profile: DegeneracyProfile) -> float:
    """``C_H = int_0^1 s / a(s) ds``, finite for every ``m_a < 2``.

    For ``w(1) = 0``, ``||w||^2 <= C_H int a |w'|^2``; with the boundary term,
    ``||u||^2 <= (1/beta + C_H) (int a |u'|^2 + beta |u(1)|^2)``.
    """
    m = measure_degeneracy(profile)
    if profile.kind == "power":
        return 1.0 / (2.0 - m)
    return _log_substituted(profile, 2, 2.0 - m)


@dataclass(frozen=True)
class ProblemConfig:
    """Parameters of the coupled system.

    ``alpha`` couples the two equations, ``beta`` is the boundary stiffness
    at ``x = 1`` and ``kernel`` carries the damper ``(tau, omega, rho)``.
    """

    profile: DegeneracyProfile
    alpha: float
    beta: float
    kernel: FractionalKernel

    @classmethod
    def power(cls, gamma: float, alpha: float, beta: float, tau: float,
              omega: float, rho: float) -> "ProblemConfig":
        return cls(DegeneracyProfile.power(gamma), alpha, beta, FractionalKernel(tau, omega, rho))

    @property
    def m_a(self) -> float:
        return self.profile.m_a

    @property
    def regime(self) -> Regime:
        return Regime.DIRICHLET_AT_0 if self.m_a < 1.0 else Regime.WEIGHTED_NEUMANN_AT_0

    @property
    def gamma(self) -> float:
        if not self.profile.is_power:
            raise ValueError("gamma is defined only for power profiles")
        return self.profile.gamma

    @property
    def tau(self) -> float:
        return self.kernel.tau

    @property
    def omega(self) -> float:
        return self.kernel.omega

    @property
    def rho(self) -> float:
        return self.kernel.rho

    def to_dict(self) -> dict:
        return {
            "profile": self.profile.describe(),
            "alpha": self.alpha,
            "beta": self.beta,
            "tau": self.kernel.tau,
            "omega_per_time": self.kernel.omega,
            "rho": self.kernel.rho,
        }


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


def validate(config: ProblemConfig) -> list[Violation]:
    """Admissibility checks; an empty list means the configuration is usable.

    The coupling-smallness rule is ``|alpha| C* < 1`` for ``m_a < 1`` and
    ``|alpha| (1/beta + C_H) < 1`` otherwise (see :func:`hardy_constant`).
    Both make the energy form coercive.
    """
    out: list[Violation] = []
    try:
        m = config.m_a
    except DegeneracyError as exc:
        return [Violation("degeneracy", str(exc))]
    k = config.kernel
    if not (k.rho > 0.0):
        out.append(Violation("rho", f"rho must be positive, got {k.rho}"))
    if not (0.0 < k.tau <= 1.0):
        out.append(Violation("tau", f"tau must lie in (0, 1], got {k.tau}"))
    if k.omega < 0.0:
        out.append(Violation("omega", f"omega must be nonnegative, got {k.omega}"))
    if config.beta < 0.0:
        out.append(Violation("beta", f"beta must be nonnegative, got {config.beta}"))
    if m < 1.0:
        cstar = poincare_constant(config.profile)
        if abs(config.alpha) * cstar >= 1.0:
            out.append(Violation(
                "coupling",
                f"|alpha| C* = {abs(config.alpha) * cstar:.6g} >= 1 (C* = {cstar:.6g})",
            ))
    else:
        if not config.beta > 0.0:
            out.append(Violation("beta", "beta must be positive when m_a >= 1"))
        else:
            bound = abs(config.alpha) * (1.0 / config.beta + hardy_constant(config.profile))
            if bound >= 1.0:
                out.append(Violation("coupling", f"|alpha| (1/beta + C_H) = {bound:.6g} >= 1"))
    return out


def nu_gamma(gamma: float) -> float:
    """Bessel order ``|1 - gamma| / (2 - gamma)``."""
    return abs(1.0 - gamma) / (2.0 - gamma)


@dataclass(frozen=True)
class ConditionCReport:
    """Pairs ``(k, m)`` whose ``alpha_{k,m}`` lies within ``tol`` of ``alpha``."""

    alpha: float
    gamma: float
    K: int
    tol: float
    violations: tuple[tuple[int, int, float], ...]

    @property
    def exact(self) -> bool:
        return not self.violations


def check_condition_C(alpha: float, gamma: float, K: int = 50, tol: float = 1e-9) -> ConditionCReport:
    """Search ``alpha_{k,m} = (1/2)((2-gamma)/2)**2 (j_{nu,k}**2 - j_{nu,m}**2)`` for ``alpha``.

    A hit means the coupled system has an undamped mode pair and is not
    strongly stable.
    """
    if not (0.0 <= gamma < 2.0):
        raise ValueError("gamma must lie in [0, 2)")
    if K < 2:
        raise ValueError("K must be at least 2")
    nu = nu_gamma(gamma)
    j2 = np.array([bessel_zero(nu, k) ** 2 for k in range(1, K + 1)])
    scale = 0.5 * ((2.0 - gamma) / 2.0) ** 2
    hits = []
    for k in range(1, K + 1):
        for m in range(1, K + 1):
            akm = scale * (j2[k - 1] - j2[m - 1])
            if abs(akm - alpha) <= tol:
                hits.append((k, m, float(akm)))
    return ConditionCReport(alpha=alpha, gamma=gamma, K=K, tol=tol, violations=tuple(hits))
