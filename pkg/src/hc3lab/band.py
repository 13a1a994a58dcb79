"""Band function analysis: the minimum value beta, its minimizer, curvature, and alpha_0."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .model1d import (
    DEFAULT_GRID,
    Grid1D,
    Material,
    ModelParams,
    golden_section,
    ground_state,
    mu1_xi,
    node_weights,
    theta0,
)
from .tridiag import ConvergenceError

__all__ = [
    "ScanRange",
    "DEFAULT_SCAN",
    "BandProfile",
    "band_profile",
    "band_derivative_fh",
    "band_minimum",
    "beta",
    "alpha0",
    "alpha0_bracket",
]

UNIQUENESS_GAP = 1e-6
# sample differences below this are eigensolver rounding, not band structure
PLATEAU_TOL = 1e-9
CURVATURE_STEP = 0.02


@dataclass(frozen=True)
class ScanRange:
    lo: float = -2.0
    hi: float = 6.0
    step: float = 0.05

    def __post_init__(self):
        if not (self.hi > self.lo and self.step > 0):
            raise ValueError("scan range needs hi > lo and step > 0")

    def points(self) -> np.ndarray:
        k = int(np.floor((self.hi - self.lo) / self.step + 1e-9))
        return self.lo + self.step * np.arange(k + 1)


DEFAULT_SCAN = ScanRange()


@dataclass(frozen=True)
class BandProfile:
    material: Material
    alpha: float
    samples: np.ndarray = field(repr=False)  # shape (k, 2): columns xi, mu1
    xi_star: float
    mu_star: float
    mu_second_deriv: float
    minimizer_unique: bool
    local_minima: tuple[tuple[float, float], ...] = ()
    edge_minimum: bool = False

    @property
    def beta(self) -> float:
        return self.mu_star


def band_derivative_fh(material: Material, alpha: float, xi: float, resolution: Grid1D = DEFAULT_GRID) -> float:
    """Feynman-Hellmann derivative of the band function in xi.

    Quadrature of ``-2 * int w(t) (t - xi) f(t)^2 dt`` with the nodal weights
    of the discretization, so it is the exact derivative of the discrete
    eigenvalue.
    """
    pair = ground_state(ModelParams(material, alpha, xi), resolution)
    return _fh_from_vector(pair.vector, material, xi, resolution)


def _fh_from_vector(u, material, xi, grid):
    w = node_weights(grid, material.m)
    return float(-2.0 * grid.h * np.sum(w * (grid.nodes - xi) * u**2))


def _refine_minimum(material, alpha, lo, hi, grid):
    """Locate a local minimum inside [lo, hi] to about 1e-10 in xi."""

    def deriv(x):
        return band_derivative_fh(material, alpha, x, grid)

    dlo, dhi = deriv(lo), deriv(hi)
    if dlo < 0.0 < dhi:
        x = brentq(deriv, lo, hi, xtol=1e-12, rtol=1e-12, maxiter=200)
    else:
        x, _ = golden_section(lambda s: mu1_xi(material, alpha, s, grid), lo, hi, tol=1e-8)
    return float(x), mu1_xi(material, alpha, x, grid)


def _second_derivative(material, alpha, xi, grid, step=CURVATURE_STEP):
    # five-point stencil applied to the exact discrete first derivative
    d = [band_derivative_fh(material, alpha, xi + k * step, grid) for k in (-2, -1, 1, 2)]
    return (d[0] - 8.0 * d[1] + 8.0 * d[2] - d[3]) / (12.0 * step)


def band_profile(
    material: Material,
    alpha: float,
    scan: ScanRange = DEFAULT_SCAN,
    resolution: Grid1D = DEFAULT_GRID,
) -> BandProfile:
    """Sample the band function over ``scan`` and refine its minima.

    Every interior local minimum of the samples is refined; the global one
    defines ``xi_star`` and ``mu_star``.  Uniqueness fails when another local
    minimum lies within ``1e-6`` of the global value.  A sampled minimum on the
    scan edge or on a flat plateau is flagged rather than refined (the infimum
    may not be attained).
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    xs = scan.points()
    vals = np.array([mu1_xi(material, alpha, x, resolution) for x in xs])
    minima = []
    for i in range(1, xs.size - 1):
        if vals[i - 1] - vals[i] > PLATEAU_TOL and vals[i + 1] - vals[i] > PLATEAU_TOL:
            minima.append(_refine_minimum(material, alpha, xs[i - 1], xs[i + 1], resolution))
    i_glob = int(np.argmin(vals))
    # no refined minimum reaches the sampled minimum: it sits on the scan edge
    # or on a flat plateau where the infimum is approached but not attained
    edge = not minima or vals[i_glob] < min(v for _, v in minima) - PLATEAU_TOL
    if edge:
        xi_star, mu_star = float(xs[i_glob]), float(vals[i_glob])
        unique = False
        second = float("nan")
    else:
        xi_star, mu_star = min(minima, key=lambda p: p[1])
        others = [v for x, v in minima if x != xi_star]
        unique = all(v - mu_star > UNIQUENESS_GAP for v in others)
        second = _second_derivative(material, alpha, xi_star, resolution)
    samples = np.column_stack([xs, vals])
    mu_star = min(mu_star, float(vals.min()))
    return BandProfile(
        material=material,
        alpha=float(alpha),
        samples=samples,
        xi_star=float(xi_star),
        mu_star=float(mu_star),
        mu_second_deriv=float(second),
        minimizer_unique=bool(unique),
        local_minima=tuple(minima),
        edge_minimum=bool(edge),
    )


def band_minimum(material: Material, alpha: float, xi_guess: float, resolution: Grid1D = DEFAULT_GRID, window: float = 0.5) -> tuple[float, float]:
    """Local band minimum near ``xi_guess``; returns (xi_star, beta).

    The window is shifted until the derivative changes sign inside it.
    """
    lo, hi = xi_guess - window, xi_guess + window
    for _ in range(40):
        dlo = band_derivative_fh(material, alpha, lo, resolution)
        dhi = band_derivative_fh(material, alpha, hi, resolution)
        if dlo < 0.0 < dhi:
            break
        if dlo >= 0.0:
            lo, hi = lo - window, lo
        else:
            lo, hi = hi, hi + window
    else:
        raise ConvergenceError("band minimum could not be bracketed")
    return _refine_minimum(material, alpha, lo, hi, resolution)


def beta(material: Material, alpha: float, resolution: Grid1D = DEFAULT_GRID, scan: ScanRange = DEFAULT_SCAN) -> float:
    """Band infimum over the scan (global minimum of the profile)."""
    return band_profile(material, alpha, scan, resolution).mu_star


def alpha0_bracket(resolution: Grid1D = DEFAULT_GRID) -> tuple[float, float]:
    return theta0(resolution) + 1e-4, 1.0 - 1e-6


@lru_cache(maxsize=256)
def _alpha0_cached(a, m, lo, hi, n, xtol):
    material = Material(a, m)
    grid = Grid1D(lo, hi, n)
    if m <= 1.0:
        check = band_profile(material, 1.0, DEFAULT_SCAN, grid)
        if float(check.samples[:, 1].min()) < -1e-4:
            raise ConvergenceError(
                f"band minimum at alpha = 1 is {check.samples[:, 1].min():.3e} < -1e-4 for m <= 1"
            )
        return 1.0
    a_lo, a_hi = alpha0_bracket(grid)
    prof = band_profile(material, a_lo, DEFAULT_SCAN, grid)
    state = {"xi": prof.xi_star}

    def f(alpha):
        x, val = band_minimum(material, alpha, state["xi"], grid)
        state["xi"] = x
        return val

    f_lo, f_hi = prof.mu_star, f(a_hi)
    if not (f_lo > 0.0 > f_hi):
        raise ConvergenceError(
            f"alpha_0 not bracketed in ({a_lo:.6f}, {a_hi:.6f}): beta = {f_lo:.3e}, {f_hi:.3e}; "
            "refine the grid or enlarge the domain"
        )
    root = brentq(f, a_lo, a_hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(root)


def alpha0(material: Material, resolution: Grid1D = DEFAULT_GRID, extrapolate: bool = False, xtol: float = 1e-11) -> float:
    """Threshold alpha_0(a, m): the coupling at which the band infimum vanishes.

    For ``m <= 1`` the value is 1 (the infimum is approached as xi -> infinity
    and is not attained); a scan at alpha = 1 checks that the band does not
    dip below ``-1e-4``.  For ``m > 1`` the root of alpha -> beta is found by
    Brent's method inside ``(Theta_0 + 1e-4, 1 - 1e-6)``.  With
    ``extrapolate`` the roots on ``h`` and ``h/2`` are Richardson-combined.
    """
    g = resolution
    val = _alpha0_cached(material.a, material.m, g.lo, g.hi, g.n, xtol)
    if not extrapolate or material.m <= 1.0:
        return val
    f = g.refined()
    val2 = _alpha0_cached(material.a, material.m, f.lo, f.hi, f.n, xtol)
    return (4.0 * val2 - val) / 3.0
