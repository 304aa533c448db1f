"""Problem configuration, degeneracy measure, constants and condition (C)."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degenwave.discretize import assemble, build_mesh, energy_form
from degenwave.model import (DegeneracyError, DegeneracyProfile, DivergenceError, ProblemConfig,
                             Regime, check_condition_C, hardy_constant, measure_degeneracy,
                             nu_gamma, poincare_constant, validate)


def _codes(cfg):
    return {v.code for v in validate(cfg)}


# -- degeneracy measure ------------------------------------------------------------


def test_power_measure():
    assert measure_degeneracy(DegeneracyProfile.power(0.5)) == 0.5


def test_oscillating_measure_against_dense_sampling():
    prof = DegeneracyProfile.oscillating(1.0, 0.4)
    # independent oracle: m_a of x(1+cos^2(0.4 ln x)) analytically differentiated
    x = np.logspace(-14, 0, 400001)
    c = np.cos(0.4 * np.log(x))
    a = x * (1 + c**2)
    da = (1 + c**2) - 2 * c * np.sin(0.4 * np.log(x)) * 0.4
    ref = np.max(x * np.abs(da) / a)
    m = measure_degeneracy(prof)
    assert 1.0 < m < 1.4
    assert abs(m - ref) < 1e-6


def test_square_is_inadmissible():
    with pytest.raises(DegeneracyError):
        measure_degeneracy(DegeneracyProfile.power(2.0))


@given(st.floats(0.0, 1.99))
def test_power_measure_is_exponent(g):
    assert measure_degeneracy(DegeneracyProfile.power(g)) == g


def test_tabulated_power_recovers_exponent():
    x = np.geomspace(1e-8, 1, 300)
    prof = DegeneracyProfile.tabulated(x, x**0.7, 0.7 * x**-0.3)
    assert abs(measure_degeneracy(prof) - 0.7) < 1e-9


# -- constants -----------------------------------------------------------------------


def test_poincare_constants():
    assert abs(poincare_constant(DegeneracyProfile.power(0.5)) - 2.0) < 1e-12
    assert abs(poincare_constant(DegeneracyProfile.power(0.9)) - 10.0) < 1e-10
    with pytest.raises(DivergenceError):
        poincare_constant(DegeneracyProfile.power(1.2))


def test_poincare_general_profile_matches_quad():
    from scipy import integrate

    prof = DegeneracyProfile.oscillating(0.5, 0.4)
    ref = integrate.quad(lambda s: 1 / float(prof.a(s)), 0, 1, limit=500)[0]
    assert abs(poincare_constant(prof) - ref) < 1e-8


def test_hardy_constant_power_and_tabulated():
    assert abs(hardy_constant(DegeneracyProfile.power(1.5)) - 2.0) < 1e-15
    x = np.geomspace(1e-9, 1, 400)
    prof = DegeneracyProfile.tabulated(x, x**1.5, 1.5 * x**0.5)
    assert abs(hardy_constant(prof) - 2.0) < 1e-6


# -- validation ------------------------------------------------------------------------


def test_validate_ok_example():
    cfg = ProblemConfig.power(0.5, 0.1, 0.0, 0.5, 1.0, 1.0)
    assert validate(cfg) == []
    assert cfg.regime is Regime.DIRICHLET_AT_0


def test_validate_beta_required_in_neumann_regime():
    cfg = ProblemConfig.power(1.5, 0.1, 0.0, 0.5, 1.0, 1.0)
    assert cfg.regime is Regime.WEIGHTED_NEUMANN_AT_0
    msgs = [v.message for v in validate(cfg) if v.code == "beta"]
    assert msgs and "positive" in msgs[0]


def test_validate_coupling_too_strong():
    cfg = ProblemConfig.power(0.5, 0.6, 1.0, 0.5, 1.0, 1.0)
    assert "coupling" in _codes(cfg)


def test_validate_rho_and_degeneracy():
    assert "rho" in _codes(ProblemConfig.power(0.5, 0.1, 1.0, 0.5, 1.0, 0.0))
    assert _codes(ProblemConfig.power(2.5, 0.1, 1.0, 0.5, 1.0, 1.0)) == {"degeneracy"}


def test_neumann_coupling_band_uses_hardy_constant():
    # |alpha| < beta alone is not coercive; this pair is rejected
    cfg = ProblemConfig.power(1.88, 2.97, 2.98, 0.5, 1.0, 1.0)
    assert "coupling" in _codes(cfg)


@given(st.floats(0.0, 1.95), st.floats(0.05, 3.0), st.floats(-1.0, 1.0), st.sampled_from([8, 24, 64]))
@settings(max_examples=60, deadline=None)
def test_valid_configs_have_positive_energy_form(g, beta, frac, N):
    prof = DegeneracyProfile.power(g)
    band = 1 / poincare_constant(prof) if g < 1 else 1 / (1 / beta + hardy_constant(prof))
    cfg = ProblemConfig.power(g, frac * band * 0.999, beta, 0.5, 1.0, 1.0)
    assert validate(cfg) == []
    Q = energy_form(assemble(cfg, build_mesh(N, m_a=cfg.m_a)))
    assert np.linalg.eigvalsh(Q).min() > 0


# -- condition (C) -----------------------------------------------------------------------


def test_nu_gamma():
    assert nu_gamma(0.0) == 0.5
    assert abs(nu_gamma(0.5) - 1 / 3) < 1e-16
    assert abs(nu_gamma(1.5) - 1.0) < 1e-16


def test_condition_C_hit_at_21():
    rep = check_condition_C(1.5 * math.pi**2, 0.0, K=5)
    assert not rep.exact
    assert [(k, m) for k, m, _ in rep.violations] == [(2, 1)]


def test_condition_C_zero_coupling_hits_diagonal():
    rep = check_condition_C(0.0, 0.5, K=6)
    assert sorted((k, m) for k, m, _ in rep.violations) == [(k, k) for k in range(1, 7)]


def test_condition_C_small_coupling_clear():
    assert check_condition_C(0.1, 0.0, K=50).exact


@given(st.floats(0.0, 1.9), st.integers(1, 12), st.integers(1, 12))
@settings(max_examples=40, deadline=None)
def test_alpha_km_antisymmetric(g, k, m):
    rep_k = check_condition_C(0.0, g, K=max(k, m, 2), tol=math.inf)
    table = {(a, b): v for a, b, v in rep_k.violations}
    assert table[(k, m)] == -table[(m, k)]
    assert table[(k, k)] == 0.0


def test_to_dict_units():
    d = ProblemConfig.power(0.5, 0.1, 1.0, 0.5, 1.0, 1.0).to_dict()
    assert d["omega_per_time"] == 1.0 and d["profile"]["gamma"] == 0.5
