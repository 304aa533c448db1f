"""Energy decay exponent from simulation traces, and its spectral counterpart."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

__all__ = [
    "InsufficientDecayError",
    "NonMonotoneWindowWarning",
    "DecayReport",
    "OptimalityReport",
    "predicted_exponent",
    "fit_decay_exponent",
    "optimality_report",
    "DEFAULT_WINDOW",
]

DEFAULT_WINDOW = (1e2, 1e4)


class InsufficientDecayError(ValueError):
    """The trace does not fall below half its initial energy inside the window."""


class NonMonotoneWindowWarning(UserWarning):
    """The energy increases somewhere inside the fit window."""


def predicted_exponent(tau: float) -> float:
    """Energy decay exponent ``2 / (3 - tau)``."""
    if not (0.0 < tau <= 1.0):
        raise ValueError("tau must lie in (0, 1]")
    return 2.0 / (3.0 - tau)


@dataclass
class DecayReport:
    s_fit: float
    window: tuple[float, float]
    r_squared: float
    predicted: float
    intercept: float
    n_points: int
    quadrature_error: float = math.nan
    trend: list[tuple[float, float]] = field(default_factory=list)

    @property
    def relative_error(self) -> float:
        return (self.s_fit - self.predicted) / self.predicted

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        d["relative_error"] = self.relative_error
        return d


def fit_decay_exponent(t, E=None, window=DEFAULT_WINDOW, tau: float | None = None,
                       quadrature_error: float = math.nan) -> DecayReport:
    """Least-squares slope of ``log E`` against ``log t`` inside ``window``.

    The first argument is either an energy trace (anything with ``t`` and
    ``total`` attributes, ``E`` omitted) or the sample times with ``E`` given.

    Raises
    ------
    InsufficientDecayError
        If no sample inside the window is below ``E(0) / 2`` or fewer than
        three positive samples fall inside it.
    """
    if E is None:
        quadrature_error = getattr(t, "quadrature_error", quadrature_error)
        t, E = t.t, t.total
    t = np.asarray(t, dtype=float)
    E = np.asarray(E, dtype=float)
    ta, tb = window
    if not tb > ta > 0:
        raise ValueError("window must satisfy 0 < t_a < t_b")
    sel = (t >= ta) & (t <= tb) & (E > 0)
    if sel.sum() < 3:
        raise InsufficientDecayError(f"fewer than three positive samples in [{ta:g}, {tb:g}]")
    E0 = E[0] if t[0] == 0 else E[np.argmin(t)]
    if not np.any(E[sel] < 0.5 * E0):
        raise InsufficientDecayError("energy never drops below E(0)/2 inside the window")
    if np.any(np.diff(E[sel]) > 0):
        warnings.warn("energy is not monotone inside the fit window", NonMonotoneWindowWarning,
                      stacklevel=2)
    x, y = np.log(t[sel]), np.log(E[sel])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    pred = predicted_exponent(tau) if tau is not None else math.nan
    return DecayReport(s_fit=float(-slope), window=(float(ta), float(tb)), r_squared=r2,
                       predicted=pred, intercept=float(intercept), n_points=int(sel.sum()),
                       quadrature_error=float(quadrature_error))


@dataclass
class OptimalityReport:
    flag: str
    k: list[float]
    trend: list[float]
    power: float
    level: float
    spread: float
    overshoot: bool
    text: str

    def to_dict(self) -> dict:
        return asdict(self)


def optimality_report(spectrum, report: DecayReport | None, *, spread_tol: float = 0.1,
                      overshoot_tol: float = 0.2) -> OptimalityReport:
    """Confront the family-2 real-part trend with the fitted exponent.

    The trend is ``|Re lam_{2,k}| k**p`` with ``p = 3 - tau`` (``p = 2`` at
    ``tau = 1``).  Flags:

    ``no-decay subspace``
        family-2 real parts vanish (strong stability fails).
    ``optimal-consistent``
        the trend is bounded and nonzero over the upper half of the range and
        ``s_fit`` does not exceed the prediction by more than ``overshoot_tol``.
    ``inconsistent``
        anything else.
    """
    tau = spectrum.config.tau
    k, tr = spectrum.trend(2)
    p = 2.0 if tau == 1.0 else 3.0 - tau
    upper = tr[k >= np.median(k)] if k.size else tr
    level = float(np.mean(upper)) if upper.size else 0.0
    spread = float((upper.max() - upper.min()) / level) if level > 0 else math.inf
    overshoot = False
    if report is not None and math.isfinite(report.predicted):
        overshoot = report.s_fit > (1.0 + overshoot_tol) * report.predicted
    re_max = max((abs(e.lam.real) for e in spectrum.family(2)), default=0.0)
    if re_max < 1e-14:
        flag = "no-decay subspace"
    elif spread <= spread_tol and not overshoot:
        flag = "optimal-consistent"
    else:
        flag = "inconsistent"
    lines = [f"|Re lam_2,k| k^{p:g}: level {level:.6e}, relative spread {spread:.3%}"]
    if report is not None:
        lines.append(f"s_fit = {report.s_fit:.4f}, predicted = {report.predicted:.4f}, "
                     f"overshoot = {overshoot}")
    lines.append(f"flag: {flag}")
    return OptimalityReport(flag=flag, k=k.tolist(), trend=tr.tolist(), power=p, level=level,
                            spread=spread, overshoot=overshoot, text="\n".join(lines))
