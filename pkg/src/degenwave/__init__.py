"""Numerical lab for coupled degenerate wave equations with a fractional boundary damper."""
__version__ = "0.1.0"

from .decay import DecayReport, fit_decay_exponent, optimality_report, predicted_exponent
from .discretize import assemble, build_mesh, discrete_energy
from .fracdiff import FractionalKernel, build_quadrature, caputo_direct
from .model import DegeneracyProfile, ProblemConfig, check_condition_C, poincare_constant, validate
from .specfun import bessel_j, bessel_zero
from .spectrum import char_f, compute_spectrum
from .timestep import EnergyTrace, simulate

__all__ = [
    "__version__",
    "DecayReport",
    "fit_decay_exponent",
    "optimality_report",
    "predicted_exponent",
    "assemble",
    "build_mesh",
    "discrete_energy",
    "FractionalKernel",
    "build_quadrature",
    "caputo_direct",
    "DegeneracyProfile",
    "ProblemConfig",
    "check_condition_C",
    "poincare_constant",
    "validate",
    "bessel_j",
    "bessel_zero",
    "char_f",
    "compute_spectrum",
    "EnergyTrace",
    "simulate",
]
