"""Time integration: energy law, reversibility, constraints and a dense oracle."""
import math

import numpy as np
import pytest
import scipy.linalg as sla

from degenwave.discretize import assemble, build_mesh, discrete_energy
from degenwave.fracdiff import build_quadrature
from degenwave.model import ProblemConfig
from degenwave.timestep import (BlowUpError, ConfigError, IncompatibleDataError, MidpointIntegrator,
                                initial_state, sample_schedule, simulate, step)

ITEM4 = dict(gamma=0.5, alpha=0.1, beta=1.0, tau=0.5, omega=1.0, rho=1.0)


def _cfg(**kw):
    p = {**ITEM4, **kw}
    return ProblemConfig.power(p["gamma"], p["alpha"], p["beta"], p["tau"], p["omega"], p["rho"])


def _setup(cfg, N=16):
    mesh = build_mesh(N, m_a=cfg.m_a)
    mats = assemble(cfg, mesh)
    quad = None if cfg.kernel.is_direct else build_quadrature(cfg.kernel)
    return mesh, mats, quad


# -- initial data ------------------------------------------------------------------


def test_gaussian_bump_respects_constraints():
    cfg = _cfg()
    mesh, mats, quad = _setup(cfg)
    s = initial_state(cfg, mesh, "gaussian_bump", mats, quad, center=0.5, width=0.2)
    assert s.u[0] == 0.0 and s.v[0] == 0.0 and s.v[-1] == 0.0
    assert s.u[-1] != 0.0


def test_first_eigenmode_rayleigh_quotient():
    cfg = _cfg()
    mesh, mats, quad = _setup(cfg, 32)
    s = initial_state(cfg, mesh, "first_eigenmode", mats, quad)
    v = s.v[mats.v_free]
    lam = sla.eigh(mats.Kv().toarray(), mats.Mv().toarray(), eigvals_only=True, subset_by_index=[0, 0])[0]
    rq = (v @ (mats.Kv() @ v)) / (v @ (mats.Mv() @ v))
    assert abs(rq - lam) < 1e-10 * lam


def test_custom_data_violating_v_at_one():
    cfg = _cfg()
    mesh, mats, quad = _setup(cfg, 8)
    bad = np.zeros(9)
    bad[-1] = 1.0
    with pytest.raises(IncompatibleDataError):
        initial_state(cfg, mesh, "custom", mats, quad, samples={"v": bad})


# -- one step ---------------------------------------------------------------------------


def test_undamped_uncoupled_conserves_energy():
    cfg = _cfg(alpha=0.0, rho=0.0)
    tr = simulate(cfg, 32, 1e-3, 2.0, check=False, every_step=True)
    assert np.max(np.abs(tr.total - tr.total[0])) < 1e-12 * tr.total[0]


def test_damped_step_never_increases_energy():
    cfg = _cfg()
    tr = simulate(cfg, 32, 1e-2, 20.0, every_step=True)
    assert np.max(np.diff(tr.total)) <= 1e-10 * tr.total[0]


def test_midpoint_energy_balance_is_exact():
    cfg = _cfg()
    tr = simulate(cfg, 32, 1e-2, 5.0, every_step=True)
    resid = np.diff(tr.total) + tr.dt * tr.dissipation[1:]
    assert np.max(np.abs(resid)) < 1e-12 * tr.total[0]


@pytest.mark.parametrize("tau", [0.3, 0.5])
def test_exponential_rule_balance_order(tau):
    # stiff nodes with kappa dt > 1 cap the per-step defect at dt^(3 - tau)
    cfg = _cfg(tau=tau)
    worst = []
    for dt in (5e-3, 2.5e-3):
        tr = simulate(cfg, 16, dt, 2.0, rule="exponential", every_step=True)
        worst.append(np.max(np.abs(np.diff(tr.total) + dt * tr.dissipation[1:])))
    assert abs(math.log2(worst[0] / worst[1]) - (3 - tau)) < 0.15


def test_time_reversibility_undamped():
    cfg = _cfg(alpha=0.0, rho=0.0, tau=1.0, omega=0.0)
    mesh, mats, quad = _setup(cfg, 16)
    s0 = initial_state(cfg, mesh, "gaussian_bump", mats, quad)
    fwd = MidpointIntegrator(mats, quad, cfg.kernel, 1e-2)
    back = MidpointIntegrator(mats, quad, cfg.kernel, -1e-2)
    s1 = back.step(fwd.step(s0))
    for a, b in ((s0.u, s1.u), (s0.v, s1.v), (s0.u_dot, s1.u_dot), (s0.v_dot, s1.v_dot)):
        assert np.max(np.abs(a - b)) < 1e-12


def test_negative_dt_rejected_with_damping():
    cfg = _cfg()
    _, mats, quad = _setup(cfg, 8)
    with pytest.raises(ValueError):
        MidpointIntegrator(mats, quad, cfg.kernel, -1e-2)


def test_constraints_preserved():
    cfg = _cfg()
    mesh, mats, quad = _setup(cfg, 16)
    s = initial_state(cfg, mesh, "gaussian_bump", mats, quad)
    for _ in range(50):
        s = step(s, mats, quad, cfg.kernel, cfg, 1e-2)
    assert s.u[0] == 0.0 and s.v[0] == 0.0 and s.v[-1] == 0.0
    assert s.u_dot[0] == 0.0 and s.v_dot[-1] == 0.0


def _dense_generator(cfg, mats, quad):
    """y = (u, v, p, q, phi) for the semi-discrete system, as a dense matrix."""
    Mu, Mv = mats.Mu().toarray(), mats.Mv().toarray()
    Ku, Kv = mats.Ku().toarray(), mats.Kv().toarray()
    aC = cfg.alpha * mats.C().toarray()
    nu, nv, nq = Mu.shape[0], Mv.shape[0], quad.count
    n = 2 * nu + 2 * nv + nq
    A = np.zeros((n, n))
    iu, iv = slice(0, nu), slice(nu, nu + nv)
    ip, iq = slice(nu + nv, 2 * nu + nv), slice(2 * nu + nv, 2 * nu + 2 * nv)
    iphi = slice(2 * nu + 2 * nv, n)
    A[iu, ip] = np.eye(nu)
    A[iv, iq] = np.eye(nv)
    Mui, Mvi = np.linalg.inv(Mu), np.linalg.inv(Mv)
    A[ip, iu] = -Mui @ Ku
    A[ip, iv] = -Mui @ aC
    force = np.zeros((nu, nq))
    force[-1, :] = cfg.kernel.zeta * quad.weights * quad.theta
    A[ip, iphi] = -Mui @ force
    A[iq, iv] = -Mvi @ Kv
    A[iq, iu] = -Mvi @ aC.T
    A[iphi, iphi] = -np.diag(quad.kappa)
    A[iphi, 2 * nu + nv - 1] = quad.theta
    return A, (iu, iv, ip, iq)


def test_two_cell_system_matches_matrix_exponential():
    cfg = _cfg(alpha=0.3, tau=0.5, omega=1.0, rho=1.0)
    quad = build_quadrature(cfg.kernel, 60, (1e-2, 1e2), tol=1e-2)
    mesh = build_mesh(2, 1.0)
    mats = assemble(cfg, mesh)
    A, (iu, iv, ip, iq) = _dense_generator(cfg, mats, quad)
    y0 = np.zeros(A.shape[0])
    y0[iu] = [0.4, 1.0]
    y0[iv] = [0.7]
    y0[iq] = [-0.2]
    nodal = {"u": np.array([0.0, 0.4, 1.0]), "v": np.array([0.0, 0.7, 0.0]),
             "v_dot": np.array([0.0, -0.2, 0.0])}
    s = initial_state(cfg, mesh, "custom", mats, quad, samples=nodal)
    integ = MidpointIntegrator(mats, quad, cfg.kernel, 2e-4)
    worst = 0.0
    for n in range(1, 5001):
        s = integ.step(s)
        if n % 1000 == 0:
            y = sla.expm(A * n * 2e-4) @ y0
            got = np.concatenate([s.u[mats.u_free], s.v[mats.v_free], s.u_dot[mats.u_free], s.v_dot[mats.v_free]])
            ref = np.concatenate([y[iu], y[iv], y[ip], y[iq]])
            worst = max(worst, np.max(np.abs(got - ref)))
    assert worst < 1e-6


# -- simulate ---------------------------------------------------------------------------


def test_zero_horizon_single_sample():
    cfg = _cfg()
    tr = simulate(cfg, 16, 1e-2, 0.0)
    assert tr.t.size == 1
    mesh, mats, quad = _setup(cfg, 16)
    s = initial_state(cfg, mesh, "first_eigenmode", mats, quad)
    assert abs(tr.total[0] - discrete_energy(s, mats, quad, cfg.kernel).total) < 1e-14


def test_strict_decrease_after_first_period():
    tr = simulate(_cfg(), 32, 1e-2, 100.0)
    late = tr.total[tr.t >= 2 * math.pi]
    assert np.all(np.diff(late) < 0)


def test_invalid_config_refused_unless_unchecked():
    cfg = _cfg(alpha=0.6)
    with pytest.raises(ConfigError):
        simulate(cfg, 8, 1e-2, 1.0)
    assert simulate(cfg, 8, 1e-2, 1.0, check=False).t.size > 1


def test_indefinite_coupling_blows_up_with_partial_trace():
    cfg = _cfg(gamma=0.0, alpha=1.5 * math.pi**2)
    with pytest.raises(BlowUpError) as exc:
        simulate(cfg, 16, 1e-2, 400.0, "gaussian_bump", check=False, init_kwargs={"fields": "u"})
    tr = exc.value.trace
    assert np.all(np.isfinite(tr.total)) and tr.total[-1] < -1e100


def test_sample_schedule_is_dense_then_logarithmic():
    idx = sample_schedule(100000, 1e-2, per_decade=40)
    assert idx[0] == 0 and idx[-1] == 100000
    assert np.all(np.diff(idx) > 0)
    assert np.array_equal(idx[:201], np.arange(201))
    assert len(idx) < 201 + 40 * 3 + 5
