"""Decay-exponent fitting and the optimality report."""
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degenwave.decay import (DEFAULT_WINDOW, InsufficientDecayError, NonMonotoneWindowWarning,
                             fit_decay_exponent, optimality_report, predicted_exponent)
from degenwave.model import ProblemConfig
from degenwave.spectrum import compute_spectrum

ITEM4 = ProblemConfig.power(0.5, 0.1, 1.0, 0.5, 1.0, 1.0)


@pytest.mark.parametrize("tau, s", [(0.5, 0.8), (1.0, 1.0), (0.1, 2 / 2.9)])
def test_predicted_exponent(tau, s):
    assert predicted_exponent(tau) == pytest.approx(s, rel=1e-15)


@pytest.mark.parametrize("tau", [0.0, -0.1, 1.2])
def test_predicted_exponent_rejects_tau(tau):
    with pytest.raises(ValueError):
        predicted_exponent(tau)


def _t():
    return np.concatenate([[0.0], np.logspace(-3, 7, 4001)])


def test_exact_power_law():
    t = _t()
    E = np.empty_like(t)
    E[0] = 1e30
    E[1:] = 7 * t[1:] ** -0.8
    rep = fit_decay_exponent(t, E, tau=0.5)
    assert abs(rep.s_fit - 0.8) < 1e-3
    assert rep.r_squared > 1 - 1e-12
    assert rep.window == DEFAULT_WINDOW
    assert abs(rep.relative_error) < 1e-3


def test_log_periodic_perturbation():
    t = _t()
    E = np.empty_like(t)
    E[0] = 1e30
    E[1:] = 7 * t[1:] ** -0.8 * (1 + 0.2 * np.sin(np.log(t[1:])))
    # the window must cover several periods of sin(log t)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonMonotoneWindowWarning)
        rep = fit_decay_exponent(t, E, window=(1e-2, 1e6), tau=0.5)
    assert abs(rep.s_fit - 0.8) < 0.05
    assert rep.r_squared < 1 - 1e-4


@settings(max_examples=40, deadline=None)
@given(s=st.floats(0.1, 2.0), c=st.floats(1e-3, 1e3))
def test_fit_invariant_under_energy_rescaling(s, c):
    t = np.logspace(0, 5, 301)
    E = 3 * t**-s
    a = fit_decay_exponent(t, E, window=(10, 1e5))
    b = fit_decay_exponent(t, c * E, window=(10, 1e5))
    assert abs(a.s_fit - s) < 1e-9
    assert abs(a.s_fit - b.s_fit) < 1e-9


def test_insufficient_decay():
    t = np.linspace(0, 1e4, 1001)
    with pytest.raises(InsufficientDecayError):
        fit_decay_exponent(t, np.ones_like(t))
    with pytest.raises(InsufficientDecayError):
        fit_decay_exponent(t, np.ones_like(t), window=(2e4, 3e4))


def test_non_monotone_window_warns():
    t = np.logspace(0, 5, 501)
    E = t**-0.8 * (1 + 0.3 * np.sin(5 * np.log(t)))
    with pytest.warns(NonMonotoneWindowWarning):
        fit_decay_exponent(t, E)


def test_trace_argument_carries_quadrature_error():
    class Trace:
        t = np.logspace(0, 5, 101)
        total = 2 * t**-0.5
        quadrature_error = 3e-7

    rep = fit_decay_exponent(Trace(), window=(10, 1e5))
    assert rep.quadrature_error == 3e-7
    assert math.isnan(rep.predicted)
    assert rep.to_dict()["window"] == [10.0, 1e5]


# -- optimality -------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def item4_spectrum():
    return compute_spectrum(ITEM4, (30, 60))


def _report(s):
    t = np.logspace(0, 5, 101)
    return fit_decay_exponent(t, t**-s, tau=0.5)


def test_optimality_consistent(item4_spectrum):
    rep = optimality_report(item4_spectrum, _report(0.8))
    assert rep.flag == "optimal-consistent"
    assert rep.power == 2.5
    assert not rep.overshoot


def test_optimality_overshoot(item4_spectrum):
    rep = optimality_report(item4_spectrum, _report(1.0))
    assert rep.overshoot
    assert rep.flag == "inconsistent"


def test_no_decay_subspace():
    cfg = ProblemConfig.power(0.5, 0.0, 1.0, 0.5, 1.0, 1.0)
    rep = optimality_report(compute_spectrum(cfg, (10, 14)), None)
    assert rep.flag == "no-decay subspace"


def test_tau_one_uses_square():
    cfg = ProblemConfig.power(0.0, 0.01, 1.0, 1.0, 0.0, 2.0)
    rep = optimality_report(compute_spectrum(cfg, (20, 24)), None)
    assert rep.power == 2.0
