"""Directed polymer in a random environment: exact recursions, moment conditions
and overshoot experiments for unbounded disorder."""

from .env_model import (Exponential, ExpPower, Gaussian, GumbelNeg, Poisson, SquaresLattice,
                        TwoPoint, Weibull, log_mgf, sample_field)
from .polymer_core import run_trace, second_moment_exact, stopping_time

__version__ = "0.1.0"

__all__ = [
    "Gaussian", "TwoPoint", "Poisson", "Weibull", "GumbelNeg", "SquaresLattice",
    "Exponential", "ExpPower", "log_mgf", "sample_field",
    "run_trace", "second_moment_exact", "stopping_time",
]
