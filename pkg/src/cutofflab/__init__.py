"""Spectral laboratory for cut-off phenomena of small-noise Langevin dynamics."""

__version__ = "0.1.0"

from .cutoff import CutoffAnalyzer, CutoffProblem, LogValue
from .potential import Potential, log_partition, turning_point
from .scaling import ScaledEigenview, scaled_eigenvalue, verify_scaling
from .spectrum import EigenSystem, Grid, solve_eigensystem
from .wkb import build_coeff_table, build_series, eval_log_growth

__all__ = [
    "__version__",
    "Potential",
    "log_partition",
    "turning_point",
    "Grid",
    "EigenSystem",
    "solve_eigensystem",
    "ScaledEigenview",
    "scaled_eigenvalue",
    "verify_scaling",
    "build_coeff_table",
    "build_series",
    "eval_log_growth",
    "CutoffProblem",
    "CutoffAnalyzer",
    "LogValue",
]
