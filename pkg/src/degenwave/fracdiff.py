"""Generalized Caputo boundary damper and its diffusive realization.

The operator ``d^{tau,omega} u = I^{1-tau,omega} u'`` is realized through an
auxiliary field ``phi(s, t)`` over frequency-like variables ``s``::

    phi_t + (s**2 + omega) phi - U(t) theta(s) = 0,     phi(s, 0) = 0,
    O(t) = sin(tau pi)/pi * int theta(s) phi(s, t) ds,

with ``theta(s) = |s|**((2 tau - 1)/2)``.  Then ``O = I^{1-tau,omega} U``.  The
``s`` integral is replaced by a quadrature on a geometric ladder whose quality
is certified through the resolvent identity

    int theta(s)**2 / (lam + omega + s**2) ds = pi / sin(tau pi) * (lam + omega)**(tau - 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

__all__ = [
    "FractionalKernel",
    "DiffusiveQuadrature",
    "DiffusiveState",
    "QuadratureValidationError",
    "BranchCutError",
    "theta",
    "build_quadrature",
    "resolvent_weight",
    "resolvent_exact",
    "identity_error",
    "zero_state",
    "step_diffusive",
    "output",
    "dissipation",
    "caputo_direct",
    "DEFAULT_NODES",
    "DEFAULT_RANGE",
    "QUADRATURE_TOL",
    "VALIDATION_POINTS",
]

DEFAULT_NODES = 200
DEFAULT_RANGE = (1e-4, 1e4)
QUADRATURE_TOL = 1e-6
VALIDATION_POINTS = (0.0 + 0j, 1.0 + 0j, 10j)


class QuadratureValidationError(ValueError):
    """The ladder fails the resolvent identity; ``achieved`` holds the error."""

    def __init__(self, achieved: float, tol: float):
        super().__init__(f"resolvent identity error {achieved:.3e} exceeds {tol:.1e}")
        self.achieved = achieved
        self.tol = tol


class BranchCutError(ValueError):
    """lam + omega lies on the closed negative real axis."""


@dataclass(frozen=True)
class FractionalKernel:
    """Damper parameters: order ``tau``, shift ``omega`` (1/time), gain ``rho``."""

    tau: float
    omega: float = 0.0
    rho: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.tau <= 1.0):
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if self.omega < 0.0:
            raise ValueError(f"omega must be nonnegative, got {self.omega}")

    @property
    def zeta(self) -> float:
        """``rho * sin(tau pi) / pi``; zero at tau = 1."""
        if self.tau == 1.0:
            return 0.0
        return self.rho * math.sin(self.tau * math.pi) / math.pi

    @property
    def is_direct(self) -> bool:
        """True when the damper reduces to ``rho * u_t(1)``."""
        return self.tau == 1.0


@dataclass(frozen=True)
class DiffusiveQuadrature:
    """Nodes and positive weights discretizing ``int_R (.) ds`` for even integrands.

    ``identity_error`` is the worst relative resolvent-identity error over
    the validation points, measured at construction.
    """

    nodes: np.ndarray
    weights: np.ndarray
    tau: float
    omega: float
    identity_error: float = math.nan

    @property
    def count(self) -> int:
        return int(self.nodes.size)

    @property
    def theta(self) -> np.ndarray:
        return theta(self.nodes, self.tau)

    @property
    def kappa(self) -> np.ndarray:
        """Relaxation rates ``s_j**2 + omega``."""
        return self.nodes**2 + self.omega


@dataclass
class DiffusiveState:
    """Values ``phi_j`` of the auxiliary field at the quadrature nodes."""

    phi: np.ndarray
    time: float = 0.0


def theta(s, tau: float):
    """``|s| ** ((2 tau - 1) / 2)``."""
    with np.errstate(divide="ignore"):
        out = np.abs(np.asarray(s, dtype=float)) ** ((2.0 * tau - 1.0) / 2.0)
    return float(out) if np.ndim(out) == 0 else out


def resolvent_exact(tau: float, omega: float, lam: complex) -> complex:
    """Closed form ``pi / sin(tau pi) * (lam + omega)**(tau - 1)``, principal branch."""
    z = complex(lam) + omega
    if z.imag == 0.0 and z.real <= 0.0:
        raise BranchCutError(f"lam + omega = {z} lies on the branch cut")
    return math.pi / math.sin(tau * math.pi) * z ** (tau - 1.0)


def resolvent_weight(kernel: FractionalKernel, quad: DiffusiveQuadrature, lam: complex) -> complex:
    """Quadrature value of ``int theta**2 / (lam + omega + s**2) ds``."""
    z = complex(lam) + kernel.omega
    if z.imag == 0.0 and z.real <= 0.0:
        raise BranchCutError(f"lam + omega = {z} lies on the branch cut")
    th2 = quad.theta**2
    return complex(np.sum(quad.weights * th2 / (z + quad.nodes**2)))


def identity_error(kernel: FractionalKernel, quad: DiffusiveQuadrature, points=VALIDATION_POINTS) -> float:
    """Worst relative resolvent-identity error over ``points``.

    ``lam = 0`` is skipped when ``omega = 0`` (the identity is singular there).
    """
    worst = 0.0
    for lam in points:
        if kernel.omega == 0.0 and lam == 0:
            continue
        exact = resolvent_exact(kernel.tau, kernel.omega, lam)
        approx = resolvent_weight(kernel, quad, lam)
        worst = max(worst, abs(approx - exact) / abs(exact))
    return worst


def build_quadrature(
    kernel: FractionalKernel,
    M: int = DEFAULT_NODES,
    range_: tuple[float, float] = DEFAULT_RANGE,
    tol: float = QUADRATURE_TOL,
) -> DiffusiveQuadrature:
    """Geometric ladder ``s_j = s_min * q**(j - 1/2)`` with log-scale cell weights.

    In ``x = ln s`` the integrand decays exponentially at both ends, so the
    midpoint rule is spectrally accurate in the interior.  The two pieces
    outside ``[s_min, s_max]`` are integrated analytically (head ``~ s**(2 tau-1)``,
    tail ``~ s**(2 tau-3)``) and lumped onto the end nodes, and the end
    nodes carry the first Euler-Maclaurin correction of the truncated rule.
    Weights are doubled since the integrand is even in ``s``.

    Raises
    ------
    QuadratureValidationError
        If the resolvent identity misses ``tol`` at the validation points.
    """
    if kernel.is_direct:
        raise ValueError("tau = 1 uses the direct damper; no quadrature is needed")
    smin, smax = map(float, range_)
    if M < 8:
        raise ValueError("M must be at least 8")
    if not (0.0 < smin < smax):
        raise ValueError("need 0 < s_min < s_max")
    tau = kernel.tau
    h = math.log(smax / smin) / M
    nodes = smin * np.exp(h * (np.arange(1, M + 1) - 0.5))
    weights = 2.0 * h * nodes
    weights[0] *= 1.0 - h * tau / 12.0
    weights[-1] *= 1.0 - h * (1.0 - tau) / 12.0
    th2 = theta(nodes, tau) ** 2
    # head: 2 int_0^smin s^(2tau-1) ds / s_1^(2tau-1)
    weights[0] += smin ** (2.0 * tau) / tau / th2[0]
    # tail: 2 int_smax^inf s^(2tau-3) ds / s_M^(2tau-3)
    weights[-1] += smax ** (2.0 * tau - 2.0) / (1.0 - tau) / (th2[-1] / nodes[-1] ** 2)
    quad = DiffusiveQuadrature(nodes=nodes, weights=weights, tau=tau, omega=kernel.omega)
    err = identity_error(kernel, quad)
    if not err <= tol:
        raise QuadratureValidationError(err, tol)
    return replace(quad, identity_error=err)


def zero_state(quad: DiffusiveQuadrature) -> DiffusiveState:
    return DiffusiveState(phi=np.zeros(quad.count))


def step_diffusive(
    state: DiffusiveState,
    quad: DiffusiveQuadrature,
    kernel: FractionalKernel,
    u_dot: float,
    dt: float,
) -> DiffusiveState:
    """Exact exponential update of every node with the input held at ``u_dot``."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    kappa = quad.kappa
    decay = np.exp(-kappa * dt)
    gain = -np.expm1(-kappa * dt) / kappa
    phi = decay * state.phi + gain * u_dot * quad.theta
    return DiffusiveState(phi=phi, time=state.time + dt)


def output(state: DiffusiveState, quad: DiffusiveQuadrature, kernel: FractionalKernel) -> float:
    """``sin(tau pi)/pi * sum_j w_j theta_j phi_j``; the boundary force is ``rho`` times this."""
    return math.sin(kernel.tau * math.pi) / math.pi * float(np.sum(quad.weights * quad.theta * state.phi))


def dissipation(state: DiffusiveState, quad: DiffusiveQuadrature, kernel: FractionalKernel) -> float:
    """Energy loss rate ``zeta * sum_j w_j (s_j**2 + omega) |phi_j|**2``."""
    return kernel.zeta * float(np.sum(quad.weights * quad.kappa * np.abs(state.phi) ** 2))


def _kernel_moment(p: float, omega: float, x: np.ndarray) -> np.ndarray:
    """``int_0^x s**(p-1) exp(-omega s) ds``."""
    if omega == 0.0:
        return x**p / p
    return omega ** (-p) * special.gamma(p) * special.gammainc(p, omega * x)


def caputo_direct(g, dt: float, tau: float, omega: float = 0.0) -> np.ndarray:
    """Generalized Caputo derivative of uniformly sampled ``g`` by product integration.

    ``g'`` is taken at the nodes (second-order differences), interpolated
    linearly on each cell, and integrated exactly against the weakly singular
    kernel ``(t - s)**(-tau) exp(-omega (t - s)) / Gamma(1 - tau)``.

    Parameters
    ----------
    g : array_like
        Samples ``g(n dt)``, ``n = 0..N``.
    dt : float
        Sample spacing.
    tau : float
        Order in (0, 1).
    omega : float
        Exponential shift.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != 1 or g.size < 4:
        raise ValueError("caputo_direct needs at least 4 samples")
    if not (0.0 < tau < 1.0):
        raise ValueError("tau must lie in (0, 1)")
    d = np.gradient(g, dt, edge_order=2)
    n = g.size
    edges = dt * np.arange(n)
    F0 = _kernel_moment(1.0 - tau, omega, edges)
    F1 = _kernel_moment(2.0 - tau, omega, edges)
    m0 = np.diff(F0)  # int over [j dt, (j+1) dt] of s^-tau e^{-omega s}
    m1 = np.diff(F1)
    a = edges[:-1]
    A = (m1 - a * m0) / dt  # weight on d_{n-1-j}
    B = ((a + dt) * m0 - m1) / dt  # weight on d_{n-j}
    out = np.zeros(n)
    out[1:] = np.convolve(A, d[:-1])[: n - 1] + np.convolve(B, d[1:])[: n - 1]
    return out / math.gamma(1.0 - tau)
