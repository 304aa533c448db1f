"""Linear finite elements for ``-(a u_x)_x`` on a graded mesh of (0, 1).

Both fields share the nodal mesh.  Their admissible sets differ: ``v``
vanishes at ``x = 1`` always, while ``u`` carries the Robin/damper condition
there.  In the Dirichlet regime (``m_a < 1``) both vanish at ``x = 0``.  In the
weighted Neumann regime the condition ``(a u_x)(0) = 0`` is natural and no
constraint is imposed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fracdiff import DiffusiveQuadrature, FractionalKernel
from .model import ProblemConfig, Regime

__all__ = [
    "AssemblyError",
    "Mesh",
    "SystemMatrices",
    "DiscreteEnergySplit",
    "build_mesh",
    "default_grading",
    "assemble",
    "discrete_energy",
    "energy_form",
]

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(4)


class AssemblyError(ValueError):
    """Constraints leave no unknowns."""


@dataclass(frozen=True)
class Mesh:
    nodes: np.ndarray
    grading: float

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def h_min(self) -> float:
        return float(self.h.min())


def default_grading(m_a: float) -> float:
    """``2 / (2 - m_a)`` clamped to [1, 4]."""
    return float(np.clip(2.0 / (2.0 - m_a), 1.0, 4.0))


def build_mesh(N: int, grading: float | None = None, m_a: float | None = None) -> Mesh:
    """Nodes ``x_i = (i/N)**g`` clustered toward the degenerate end.

    ``grading`` defaults to :func:`default_grading` of ``m_a`` (uniform when
    neither is given).
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    if grading is None:
        grading = 1.0 if m_a is None else default_grading(m_a)
    if grading < 1.0:
        raise ValueError("grading exponent must be >= 1")
    x = (np.arange(N + 1) / N) ** grading
    x[0], x[-1] = 0.0, 1.0
    return Mesh(nodes=x, grading=float(grading))


def _cell_integrals_of_a(config: ProblemConfig, x: np.ndarray) -> np.ndarray:
    """``int_{x_i}^{x_{i+1}} a``: closed form for powers, 4-point Gauss otherwise."""
    prof = config.profile
    if prof.is_power:
        g1 = prof.gamma + 1.0
        return np.diff(x**g1) / g1
    left, right = x[:-1], x[1:]
    mid, half = 0.5 * (left + right), 0.5 * (right - left)
    pts = mid[:, None] + half[:, None] * _GAUSS_X[None, :]
    return half * (prof.a(pts) @ _GAUSS_W)


@dataclass(frozen=True)
class SystemMatrices:
    """Full nodal matrices plus the active index sets of each field.

    ``K`` excludes the ``beta`` boundary term; :meth:`Ku` adds it.
    """

    mesh: Mesh
    M: sp.csr_matrix
    K: sp.csr_matrix
    alpha: float
    beta: float
    u_free: np.ndarray
    v_free: np.ndarray
    regime: Regime

    @property
    def trace_index(self) -> int:
        """Node index of ``x = 1``."""
        return self.mesh.N

    @property
    def trace_vector(self) -> np.ndarray:
        """Selector of ``u(1)`` among the active ``u`` unknowns."""
        e = np.zeros(self.u_free.size)
        e[-1] = 1.0
        return e

    def _block(self, A, rows, cols):
        return A[rows][:, cols].tocsc()

    def Mu(self):
        return self._block(self.M, self.u_free, self.u_free)

    def Mv(self):
        return self._block(self.M, self.v_free, self.v_free)

    def Ku(self):
        """Stiffness of ``u`` including ``beta u(1) w(1)``."""
        K = self._block(self.K, self.u_free, self.u_free).tolil()
        K[-1, -1] += self.beta
        return K.tocsc()

    def Kv(self):
        return self._block(self.K, self.v_free, self.v_free)

    def C(self):
        """Coupling block ``int v w`` with rows on ``u`` unknowns, columns on ``v``."""
        return self._block(self.M, self.u_free, self.v_free)


def assemble(config: ProblemConfig, mesh: Mesh) -> SystemMatrices:
    """Consistent mass and weighted stiffness for linear elements.

    The cell stiffness is ``(int_cell a) / h**2 * [[1, -1], [-1, 1]]``, which
    is exact for piecewise linear functions.
    """
    x = mesh.nodes
    N = mesh.N
    h = np.diff(x)
    ka = _cell_integrals_of_a(config, x) / h**2
    i = np.arange(N)
    rows = np.concatenate([i, i, i + 1, i + 1])
    cols = np.concatenate([i, i + 1, i, i + 1])
    Kvals = np.concatenate([ka, -ka, -ka, ka])
    Mvals = np.concatenate([h / 3.0, h / 6.0, h / 6.0, h / 3.0])
    K = sp.coo_matrix((Kvals, (rows, cols)), shape=(N + 1, N + 1)).tocsr()
    M = sp.coo_matrix((Mvals, (rows, cols)), shape=(N + 1, N + 1)).tocsr()
    regime = config.regime
    all_idx = np.arange(N + 1)
    if regime is Regime.DIRICHLET_AT_0:
        u_free = all_idx[1:]
        v_free = all_idx[1:-1]
    else:
        u_free = all_idx
        v_free = all_idx[:-1]
    if u_free.size == 0 or v_free.size == 0:
        raise AssemblyError("constraints remove every unknown")
    return SystemMatrices(mesh=mesh, M=M, K=K, alpha=float(config.alpha), beta=float(config.beta),
                          u_free=u_free, v_free=v_free, regime=regime)


@dataclass(frozen=True)
class DiscreteEnergySplit:
    kinetic: float
    potential: float
    coupling: float
    boundary: float
    diffusive: float

    @property
    def total(self) -> float:
        return self.kinetic + self.potential + self.coupling + self.boundary + self.diffusive


def discrete_energy(state, matrices: SystemMatrices, quad: DiffusiveQuadrature | None,
                    kernel: FractionalKernel, config: ProblemConfig | None = None) -> DiscreteEnergySplit:
    """Energy of a nodal state split into its five parts.

    ``state`` needs full nodal vectors ``u, v, u_dot, v_dot`` and, for
    ``tau < 1``, a diffusive field ``diff.phi``.  ``config`` is accepted for
    symmetry with the other entry points; ``alpha`` and ``beta`` are read
    from ``matrices``.
    """
    M, K = matrices.M, matrices.K
    u, v = np.asarray(state.u), np.asarray(state.v)
    ud, vd = np.asarray(state.u_dot), np.asarray(state.v_dot)
    kinetic = 0.5 * (np.real(np.vdot(ud, M @ ud)) + np.real(np.vdot(vd, M @ vd)))
    potential = 0.5 * (np.real(np.vdot(u, K @ u)) + np.real(np.vdot(v, K @ v)))
    coupling = matrices.alpha * np.real(np.vdot(v, M @ u))
    boundary = 0.5 * matrices.beta * abs(u[matrices.trace_index]) ** 2
    diffusive = 0.0
    if quad is not None and not kernel.is_direct and state.diff is not None:
        diffusive = 0.5 * kernel.zeta * float(np.sum(quad.weights * np.abs(state.diff.phi) ** 2))
    return DiscreteEnergySplit(float(kinetic), float(potential), float(coupling),
                               float(boundary), float(diffusive))


def energy_form(matrices: SystemMatrices) -> np.ndarray:
    """Dense matrix of the mechanical energy on (u, v, u_dot, v_dot) active unknowns.

    The diffusive part is diagonal and positive and is left out.
    """
    Mu, Mv = matrices.Mu().toarray(), matrices.Mv().toarray()
    Ku, Kv = matrices.Ku().toarray(), matrices.Kv().toarray()
    C = matrices.alpha * matrices.C().toarray()
    nu, nv = Mu.shape[0], Mv.shape[0]
    n = 2 * (nu + nv)
    Q = np.zeros((n, n))
    Q[:nu, :nu] = Ku
    Q[nu:nu + nv, nu:nu + nv] = Kv
    Q[:nu, nu:nu + nv] = C
    Q[nu:nu + nv, :nu] = C.T
    Q[nu + nv:2 * nu + nv, nu + nv:2 * nu + nv] = Mu
    Q[2 * nu + nv:, 2 * nu + nv:] = Mv
    return 0.5 * Q
