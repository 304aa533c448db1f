"""Eigenvalues of the damped coupled system through its characteristic function.

For ``a = x**gamma`` with ``gamma < 1`` the eigenvalues are the zeros of

    f(lam) = 2 (bt + D) J_nu(Z) J_nu(W) - i lt J_{nu+1}(Z) J_nu(W) - i ltt J_{nu+1}(W) J_nu(Z),

with ``Z = r i lt``, ``W = r i ltt``, ``lt = sqrt(lam**2 + alpha)``,
``ltt = sqrt(lam**2 - alpha)``, ``bt = beta + 1 - gamma`` and the damper symbol
``D = rho lam (lam + omega)**(tau - 1)`` (``rho lam`` at ``tau = 1``).

Writing ``J_mu(z) = z**mu E_mu(z)`` with ``E_mu`` even and entire gives
``f = (Z W)**nu g`` where

    g(lam) = 2 (bt + D) E_nu(Z) E_nu(W) + r (lam**2 + alpha) E_{nu+1}(Z) E_nu(W)
             + r (lam**2 - alpha) E_{nu+1}(W) E_nu(Z).

``g`` has the same zeros as ``f`` off ``lam**2 = +-alpha`` but no square-root
branch cuts; only ``D`` keeps the cut ``(-inf, -omega]``.  Root finding uses
``fhat = r (-r**2 lam**2)**nu g``, which is O(1) on the strip of interest
(the product of Bessel envelopes is divided out).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .discretize import Mesh, assemble
from .model import DegeneracyProfile, ProblemConfig, Regime, nu_gamma
from .specfun import bessel_j_reduced

__all__ = [
    "BranchCutError",
    "RootNotFoundError",
    "PositiveRealPartError",
    "CountMismatchError",
    "ContourError",
    "UndefinedSeedError",
    "CharacteristicParams",
    "Eigenvalue",
    "SpectrumResult",
    "characteristic_params",
    "char_f",
    "char_f_scaled",
    "char_f_shooting",
    "asymptotic_seed",
    "beta1_candidates",
    "beta2_candidates",
    "strip_halfwidth",
    "refine_root",
    "count_roots",
    "window",
    "compute_spectrum",
    "exp_stability_witness",
]


class BranchCutError(ValueError):
    """lam lies on (-inf, -omega] where the damper symbol is discontinuous."""


class RootNotFoundError(RuntimeError):
    """Newton did not converge."""


class PositiveRealPartError(RuntimeError):
    """A converged root has Re lam > 0, which a dissipative operator forbids."""


class CountMismatchError(RuntimeError):
    """A window holds a different number of roots than expected."""

    def __init__(self, message: str, window=None, count=None):
        super().__init__(message)
        self.window = window
        self.count = count


class ContourError(RuntimeError):
    """The counting contour passes (numerically) through a root."""


class UndefinedSeedError(ValueError):
    """The tau = 1 family-1 seed needs rho != 1."""


# ---------------------------------------------------------------------------
# parameters


def _hankel_a1(nu: float) -> float:
    return (4.0 * nu * nu - 1.0) / 8.0


def _hankel_a2(nu: float) -> float:
    mu = 4.0 * nu * nu
    return (mu - 1.0) * (mu - 9.0) / 128.0


@dataclass(frozen=True)
class CharacteristicParams:
    """Derived symbols of the characteristic function for ``a = x**gamma``."""

    gamma: float
    r: float
    nu: float
    beta_tilde: float
    a1: float
    a1_tilde: float
    a2: float
    a2_tilde: float
    ell: float | None

    def lam_tilde(self, lam: complex, alpha: float) -> complex:
        return cmath.sqrt(lam * lam + alpha)

    def lam_tilde2(self, lam: complex, alpha: float) -> complex:
        return cmath.sqrt(lam * lam - alpha)


def characteristic_params(config: ProblemConfig) -> CharacteristicParams:
    gamma = config.gamma
    nu = nu_gamma(gamma)
    rho, tau = config.rho, config.tau
    ell = None
    if tau == 1.0 and rho != 1.0:
        ell = 0.5 * math.log(abs(rho - 1.0) / (rho + 1.0))
    return CharacteristicParams(
        gamma=gamma,
        r=2.0 / (2.0 - gamma),
        nu=nu,
        beta_tilde=config.beta + 1.0 - gamma,
        a1=_hankel_a1(nu),
        a1_tilde=_hankel_a1(nu + 1.0),
        a2=_hankel_a2(nu),
        a2_tilde=_hankel_a2(nu + 1.0),
        ell=ell,
    )


def _damper_symbol(lam: complex, config: ProblemConfig) -> complex:
    k = config.kernel
    if k.is_direct:
        return k.rho * lam
    z = lam + k.omega
    if z.imag == 0.0 and z.real <= 0.0:
        raise BranchCutError(f"lam = {lam} lies on the cut (-inf, -omega]")
    return k.rho * lam * z ** (k.tau - 1.0)


def _require_closed_form(config: ProblemConfig):
    if not config.profile.is_power:
        raise ValueError("the closed-form characteristic function needs a = x**gamma")
    if config.gamma >= 1.0:
        raise ValueError("the closed-form characteristic function covers gamma < 1; use shooting")


def _g(lam: complex, config: ProblemConfig, cp: CharacteristicParams) -> complex:
    alpha = config.alpha
    r, nu = cp.r, cp.nu
    lp, lm = lam * lam + alpha, lam * lam - alpha
    Z = r * 1j * cmath.sqrt(lp)
    W = r * 1j * cmath.sqrt(lm)
    eZ0, eZ1 = bessel_j_reduced(nu, Z), bessel_j_reduced(nu + 1.0, Z)
    eW0, eW1 = bessel_j_reduced(nu, W), bessel_j_reduced(nu + 1.0, W)
    D = _damper_symbol(lam, config)
    return 2.0 * (cp.beta_tilde + D) * eZ0 * eW0 + r * lp * eZ1 * eW0 + r * lm * eW1 * eZ0


def char_f(lam: complex, config: ProblemConfig) -> complex:
    """The characteristic function with principal branches throughout.

    Raises
    ------
    BranchCutError
        If ``lam`` lies on ``(-inf, -omega]``.
    """
    _require_closed_form(config)
    lam = complex(lam)
    cp = characteristic_params(config)
    alpha, r, nu = config.alpha, cp.r, cp.nu
    lt, ltt = cmath.sqrt(lam * lam + alpha), cmath.sqrt(lam * lam - alpha)
    Z, W = r * 1j * lt, r * 1j * ltt
    if abs(lam) > 1e3:
        # product of the two Bessel envelopes sqrt(2/(pi z)) e^{|Im z|} would overflow
        return cmath.exp(-abs(Z.imag) - abs(W.imag)) * (Z * W) ** nu * _g(lam, config, cp)
    return (Z * W) ** nu * _g(lam, config, cp)


def char_f_scaled(lam: complex, config: ProblemConfig) -> complex:
    """``r (-r**2 lam**2)**nu g(lam)``: same zeros as :func:`char_f`, O(1) size."""
    _require_closed_form(config)
    lam = complex(lam)
    cp = characteristic_params(config)
    return cp.r * (-(cp.r**2) * lam * lam) ** cp.nu * _g(lam, config, cp)


# ---------------------------------------------------------------------------
# shooting


def _frobenius_start(profile: DegeneracyProfile, regime: Regime, c: complex, eps: float,
                     n: int = 400, sweeps: int = 4):
    """Regular solution of ``(a y')' = c y`` at ``x = eps`` by Picard sweeps on [0, eps].

    Returns ``(y, a y')``.  Dirichlet: ``y(0) = 0, (a y')(0) = 1``.
    Neumann: ``y(0) = 1, (a y')(0) = 0``.
    """
    m = profile.m_a
    p = 1.0 / (1.0 - m) if m < 1.0 else 1.0
    t = np.linspace(0.0, 1.0, n + 1)
    x = eps * t**p
    dxdt = eps * p * t ** (p - 1.0) if p != 1.0 else np.full_like(t, eps)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_a = np.where(x > 0, 1.0 / profile.a(np.maximum(x, 1e-300)), 0.0)

    def cumint(vals):  # cumulative trapezoid in t
        out = np.zeros_like(vals, dtype=complex)
        out[1:] = np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(t))
        return out

    if regime is Regime.DIRICHLET_AT_0:
        w = inv_a * dxdt  # dx/a, integrable after the substitution
        w[0] = w[1] if p > 1.0 else w[0]
        y2 = np.ones(n + 1, dtype=complex)
        y1 = cumint(y2 * w)
        for _ in range(sweeps):
            y2 = 1.0 + c * cumint(y1 * dxdt)
            y1 = cumint(y2 * w)
    else:
        y1 = np.ones(n + 1, dtype=complex)
        y2 = c * cumint(y1 * dxdt)
        w = inv_a * dxdt
        for _ in range(sweeps):
            # y2/a is bounded near 0 since y2 ~ c x and a ~ x**m with m < 2
            g = np.where(x > 0, y2 * w, 0.0)
            y1 = 1.0 + cumint(g)
            y2 = c * cumint(y1 * dxdt)
    return complex(y1[-1]), complex(y2[-1])


def _shoot(profile: DegeneracyProfile, regime: Regime, c: complex, eps: float,
           rtol: float, atol: float):
    y0 = _frobenius_start(profile, regime, c, eps)

    def rhs(x, y):
        return [y[1] / float(profile.a(x)), c * y[0]]

    sol = solve_ivp(rhs, (eps, 1.0), np.array(y0, dtype=complex), method="DOP853",
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    return sol.y[0, -1], sol.y[1, -1]


def char_f_shooting(lam: complex, config: ProblemConfig, profile: DegeneracyProfile | None = None,
                    eps: float = 1e-6, rtol: float = 1e-11, atol: float = 1e-14) -> complex:
    """Boundary determinant from integrating the decoupled ODEs for a general ``a``.

    ``phi = u + v`` and ``psi = u - v`` solve ``(a y')' = (lam**2 +- alpha) y``.
    The determinant enforces ``v(1) = 0`` and
    ``(beta + D) u(1) + (a u_x)(1) = 0``.
    """
    profile = profile if profile is not None else config.profile
    lam = complex(lam)
    regime = Regime.DIRICHLET_AT_0 if profile.m_a < 1.0 else Regime.WEIGHTED_NEUMANN_AT_0
    P, aP = _shoot(profile, regime, lam * lam + config.alpha, eps, rtol, atol)
    S, aS = _shoot(profile, regime, lam * lam - config.alpha, eps, rtol, atol)
    bD = config.beta + _damper_symbol(lam, config)
    return P * (bD * S + aS) + S * (bD * P + aP)


# ---------------------------------------------------------------------------
# asymptotics


def beta1_candidates(config: ProblemConfig) -> dict[str, float]:
    """Family-1 real-part constants: ``stated`` uses ``r**tau``, ``proof`` uses ``r**-tau``."""
    r = 2.0 / (2.0 - config.gamma)
    tau, rho = config.tau, config.rho
    base = -rho / math.pi ** (1.0 - tau) * math.cos((1.0 - tau) * math.pi / 2.0)
    return {"stated": r**tau * base, "proof": r ** (-tau) * base}


def beta2_candidates(config: ProblemConfig) -> dict[str, float]:
    """Family-2 real-part constants: ``stated`` uses ``r**(4-tau)``.

    ``mirror`` flips the sign of the exponent, the same alteration that
    separates the two family-1 candidates.  At ``tau = 1`` both reduce to
    the ``k**-2`` law with ``r**3`` or ``r**-3``.
    """
    r = 2.0 / (2.0 - config.gamma)
    tau, rho, alpha = config.tau, config.rho, config.alpha
    base = -rho * alpha**2 / (4.0 * math.pi ** (3.0 - tau)) * math.cos((1.0 - tau) * math.pi / 2.0)
    return {"stated": r ** (4.0 - tau) * base, "mirror": r ** (tau - 4.0) * base}


def _offsets(cp: CharacteristicParams, config: ProblemConfig, variant: str):
    """Fractional offsets (in units of pi) of the two families' imaginary parts."""
    nu = cp.nu
    if variant == "stated":
        o2 = (1.0 - 2.0 * nu) / 4.0
        o1 = (1.0 - 2.0 * nu) / 4.0 if (config.tau == 1.0 and config.rho > 1.0) else (3.0 - 2.0 * nu) / 4.0
    elif variant == "corrected":
        o2 = (2.0 * nu - 1.0) / 4.0
        o1 = (2.0 * nu - 1.0) / 4.0 if (config.tau == 1.0 and config.rho > 1.0) else (2.0 * nu + 1.0) / 4.0
    else:
        raise ValueError(f"unknown seed variant {variant!r}")
    return o1, o2


def asymptotic_seed(family: int, k: int, config: ProblemConfig, variant: str = "stated",
                    beta1: str = "proof") -> complex:
    """Large-``k`` expansion of the eigenvalue ``lam_{family,k}`` (k > 0).

    ``variant="stated"`` reproduces the published offsets literally.
    ``variant="corrected"`` uses the offsets that conjugate symmetry and the
    McMahon expansion of Bessel zeros give for ``k > 0`` (the stated ones
    are the ``k < 0`` branch).  ``beta1`` selects the family-1 constant.
    """
    if family not in (1, 2):
        raise ValueError("family must be 1 or 2")
    cp = characteristic_params(config)
    o1, o2 = _offsets(cp, config, variant)
    scale = 1.0 / cp.r
    tau = config.tau
    if family == 2:
        kp = k * math.pi
        im = kp + o2 * math.pi - cp.a1 / kp + o2 * cp.a1 / (k * kp)
        if tau == 1.0:
            re = -(cp.r**3) * config.rho * config.alpha**2 / (4.0 * kp**2)
        else:
            re = beta2_candidates(config)["stated"] / k ** (3.0 - tau)
        return complex(re, scale * im)
    if tau == 1.0:
        if cp.ell is None:
            raise UndefinedSeedError("rho = 1 makes ln sqrt((rho-1)/(rho+1)) undefined")
        return scale * complex(cp.ell, (k + o1) * math.pi)
    return complex(beta1_candidates(config)[beta1] / k ** (1.0 - tau), scale * (k + o1) * math.pi)


def strip_halfwidth(config: ProblemConfig) -> float:
    """``alpha_0 = 5 max(|beta_1| candidates, |ell| / r at tau = 1)``."""
    vals = [abs(v) for v in beta1_candidates(config).values()] if config.tau < 1.0 else []
    cp = characteristic_params(config)
    if config.tau == 1.0 and cp.ell is not None:
        vals.append(abs(cp.ell) / cp.r)
    return 5.0 * max(vals + [0.1])


# ---------------------------------------------------------------------------
# root finding


def _fun(config: ProblemConfig, method: str):
    if method == "closed":
        return lambda z: char_f_scaled(z, config)
    if method == "shooting":
        return lambda z: char_f_shooting(z, config)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class RefinedRoot:
    lam: complex
    residual: float
    iterations: int


def refine_root(seed: complex, config: ProblemConfig, method: str = "closed", *,
                tol: float = 1e-10, max_iter: int = 60) -> RefinedRoot:
    """Damped Newton with a central-difference derivative.

    Iterates until the step stalls at rounding level, then accepts when the
    scaled residual is below ``tol``.

    Raises
    ------
    RootNotFoundError
        On non-convergence or a vanishing derivative.
    PositiveRealPartError
        If the converged root has ``Re lam > 1e-8``.
    """
    f = _fun(config, method)
    z = complex(seed)
    fz = f(z)
    for it in range(1, max_iter + 1):
        h = 1e-6 * max(1.0, abs(z))
        dfz = (f(z + h) - f(z - h)) / (2.0 * h)
        if dfz == 0 or abs(dfz) < 1e-12 * max(abs(fz), 1e-300) / h:
            raise RootNotFoundError(f"derivative vanishes near {z}")
        step = fz / dfz
        lam_new, f_new = z - step, None
        for _ in range(30):
            f_new = f(lam_new)
            if abs(f_new) <= abs(fz) or abs(fz) < tol * 1e-3:
                break
            step *= 0.5
            lam_new = z - step
        else:
            raise RootNotFoundError(f"damping failed near {z}")
        small_step = abs(lam_new - z) <= 4e-15 * max(1.0, abs(z))
        z, fz = lam_new, f_new
        if small_step or fz == 0:
            break
    else:
        if not abs(fz) < tol:
            raise RootNotFoundError(f"no convergence from {seed}: |f| = {abs(fz):.3e}")
    if not abs(fz) < tol:
        raise RootNotFoundError(f"stalled at {z} with |f| = {abs(fz):.3e}")
    if z.real > 1e-8:
        raise PositiveRealPartError(f"root {z} has positive real part")
    return RefinedRoot(z, abs(fz), it)


def count_roots(rect, config: ProblemConfig, method: str = "closed", *,
                initial: int = 32, max_points: int = 20000) -> int:
    """Winding number of ``fhat`` around ``rect = (re_min, re_max, im_min, im_max)``.

    Segments are bisected until consecutive phase changes are below ``pi/4``.

    Raises
    ------
    ContourError
        If ``|fhat|`` is tiny somewhere on the contour.
    """
    f = _fun(config, method)
    x0, x1, y0, y1 = map(float, rect)
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    total = 0.0
    used = 0
    for a, b in zip(corners, corners[1:] + corners[:1]):
        ts = list(np.linspace(0.0, 1.0, initial + 1))
        vals = [f(a + (b - a) * t) for t in ts]
        used += len(vals)
        i = 0
        while i < len(ts) - 1:
            va, vb = vals[i], vals[i + 1]
            if min(abs(va), abs(vb)) < 1e-13:
                raise ContourError(f"contour passes through a root near {a + (b - a) * ts[i]}")
            dphi = cmath.phase(vb / va)
            if abs(dphi) > math.pi / 4:
                if used > max_points or ts[i + 1] - ts[i] < 1e-12:
                    raise ContourError("phase tracking did not resolve the contour")
                tm = 0.5 * (ts[i] + ts[i + 1])
                ts.insert(i + 1, tm)
                vals.insert(i + 1, f(a + (b - a) * tm))
                used += 1
                continue
            total += dphi
            i += 1
    return int(round(total / (2.0 * math.pi)))


def window(k: int, config: ProblemConfig, halfwidth: float | None = None, right: float = 1e-3):
    """Rectangle ``Re in [-alpha_0, right]``, ``Im in ((k - 1/2), (k + 1/2)) pi / r``."""
    r = 2.0 / (2.0 - config.gamma)
    a0 = strip_halfwidth(config) if halfwidth is None else halfwidth
    return (-a0, right, (k - 0.5) * math.pi / r, (k + 0.5) * math.pi / r)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Eigenvalue:
    family: int
    k: int
    lam: complex
    residual: float
    seed: complex
    seed_variant: str
    iterations: int


@dataclass
class SpectrumResult:
    """Accepted roots (upper half plane, ``k > 0``) and per-window counts."""

    config: ProblemConfig
    roots: list[Eigenvalue]
    counts: dict[int, int] = field(default_factory=dict)

    def family(self, j: int) -> list[Eigenvalue]:
        return sorted((e for e in self.roots if e.family == j), key=lambda e: e.k)

    def with_conjugates(self) -> list[complex]:
        out = []
        for e in self.roots:
            out.extend([e.lam, e.lam.conjugate()])
        return out

    def trend(self, family: int = 2) -> tuple[np.ndarray, np.ndarray]:
        """``(k, |Re lam| k**p)`` with ``p = 3 - tau`` (family 2; ``2`` at tau = 1) or ``1 - tau``."""
        tau = self.config.tau
        if family == 2:
            p = 2.0 if tau == 1.0 else 3.0 - tau
        else:
            p = 1.0 - tau
        rows = self.family(family)
        k = np.array([e.k for e in rows], dtype=float)
        re = np.array([abs(e.lam.real) for e in rows])
        return k, re * k**p


def _in_window(lam: complex, rect) -> bool:
    return rect[0] <= lam.real <= rect[1] and rect[2] < lam.imag < rect[3]


def compute_spectrum(config: ProblemConfig, k_range, *, verify_counts: bool = True,
                     method: str = "closed") -> SpectrumResult:
    """Both root families for each ``k`` in ``k_range``.

    Each root is refined from the stated seed first.  When that lands outside
    its window or on the other family's root, the corrected seed is used and
    the provenance records it.  Each window must hold exactly two roots.

    Raises
    ------
    CountMismatchError
        A window holds other than two roots, or a family root is missing.
    """
    k_lo, k_hi = int(k_range[0]), int(k_range[1])
    roots: list[Eigenvalue] = []
    counts: dict[int, int] = {}
    for k in range(k_lo, k_hi + 1):
        rect = window(k, config)
        found: dict[int, Eigenvalue] = {}
        for fam in (2, 1):
            for variant in ("stated", "corrected"):
                seed = asymptotic_seed(fam, k, config, variant)
                try:
                    rr = refine_root(seed, config, method)
                except (RootNotFoundError, PositiveRealPartError):
                    continue
                if not _in_window(rr.lam, rect):
                    continue
                other = found.get(3 - fam)
                if other is not None and abs(other.lam - rr.lam) < 1e-8 * max(1.0, abs(rr.lam)):
                    continue
                found[fam] = Eigenvalue(fam, k, rr.lam, rr.residual, seed, variant, rr.iterations)
                break
            if fam not in found:
                raise CountMismatchError(f"family {fam} root not found for k = {k}", window=rect)
        # family labels: the damper-driven family has the larger |Re|
        e1, e2 = found[1], found[2]
        if abs(e2.lam.real) > abs(e1.lam.real):
            e1, e2 = (Eigenvalue(1, k, e2.lam, e2.residual, e2.seed, e2.seed_variant, e2.iterations),
                      Eigenvalue(2, k, e1.lam, e1.residual, e1.seed, e1.seed_variant, e1.iterations))
        roots.extend([e1, e2])
        if verify_counts:
            n = count_roots(rect, config, method)
            counts[k] = n
            if n != 2:
                raise CountMismatchError(f"window k = {k} holds {n} roots, expected 2", window=rect, count=n)
    return SpectrumResult(config, roots, counts)


# ---------------------------------------------------------------------------


def exp_stability_witness(config: ProblemConfig, mesh: Mesh, n: int) -> float:
    """``||(i sqrt(mu_n) - A_h) U_n||**2`` in the discrete energy norm.

    ``(mu_n, e_n)`` is the n-th eigenpair of the ``v`` stiffness/mass pencil
    (unit mass norm) and ``U_n = (0, 0, e_n / (i sqrt(mu_n)), e_n, 0) / sqrt(2)``
    in the ordering ``(u, u_t, v, v_t, phi)``.  The continuous value is
    ``alpha**2 / (2 mu_n)``.
    """
    import scipy.linalg as sla
    import scipy.sparse.linalg as spla

    mats = assemble(config, mesh)
    Mu, Mv, Ku, Kv, C = mats.Mu(), mats.Mv(), mats.Ku(), mats.Kv(), mats.C()
    alpha = config.alpha
    mu, vecs = sla.eigh(Kv.toarray(), Mv.toarray(), subset_by_index=[n - 1, n - 1])
    mu = float(mu[0])
    e = vecs[:, 0] / math.sqrt(float(vecs[:, 0] @ (Mv @ vecs[:, 0])))
    s = 1j * math.sqrt(mu)
    nu_ = Mu.shape[0]
    u = np.zeros(nu_, dtype=complex)
    ut = np.zeros(nu_, dtype=complex)
    v = e / s / math.sqrt(2.0)
    vt = e / math.sqrt(2.0) + 0j
    # A_h U: (u_t, -Mu^{-1}(Ku u + alpha C v + e_N F), v_t, -Mv^{-1}(Kv v + alpha C^T u), ...)
    # with F = 0 and a zero diffusive field because u_t(1) = 0 and phi = 0.
    Au = ut
    Aut = -spla.spsolve(Mu.tocsc(), (Ku @ u + alpha * (C @ v)).astype(complex))
    Av = vt
    Avt = -spla.spsolve(Mv.tocsc(), (Kv @ v + alpha * (C.T @ u)).astype(complex))
    r_u, r_ut, r_v, r_vt = s * u - Au, s * ut - Aut, s * v - Av, s * vt - Avt
    norm2 = (np.vdot(r_ut, Mu @ r_ut) + np.vdot(r_u, Ku @ r_u) + np.vdot(r_vt, Mv @ r_vt)
             + np.vdot(r_v, Kv @ r_v) + 2.0 * alpha * np.vdot(r_v, C.T @ r_u))
    return float(norm2.real)
