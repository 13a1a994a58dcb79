"""Numerical laboratory for surface superconductivity with a normal-metal shell.

Modules: ``model1d`` (1D model operators, Theta_0), ``band`` (band function,
alpha_0), ``constants`` (spectral constants at the band minimum), ``planar``
(2D linear eigenvalue), ``fields`` (critical fields), ``glflow`` (nonlinear
Ginzburg-Landau minimization), ``verify`` (acceptance battery), ``cli``
(command line) with ``config`` and ``io`` for run configuration and
artifact writing.
"""

__version__ = "0.1.0"

from .band import alpha0, band_profile, beta
from .constants import model_constants
from .model1d import DEFAULT_GRID, Grid1D, Material, ModelParams, mu1_xi, theta0
from .tridiag import ConvergenceError

__all__ = [
    "__version__",
    "ConvergenceError",
    "DEFAULT_GRID",
    "Grid1D",
    "Material",
    "ModelParams",
    "alpha0",
    "band_profile",
    "beta",
    "model_constants",
    "mu1_xi",
    "theta0",
]
