"""The one-dimensional model operators on the line and on the half-line.

The full-line family acts as ``-(w u')' + w (t - xi)^2 u + alpha V u`` with
``w = 1, V = -1`` for ``t > 0`` (superconductor) and ``w = 1/m, V = a`` for
``t < 0`` (normal metal).  It is discretized in flux form on a uniform grid
whose node set contains the interface ``t = 0``, which keeps the matrix
symmetric and second-order accurate across the jump of ``w``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .tridiag import ConvergenceError, SymTridiagonal, lowest_eigenpair

__all__ = [
    "Material",
    "Grid1D",
    "ModelParams",
    "Eigenpair1D",
    "DEFAULT_GRID",
    "assemble_model_operator",
    "ground_state",
    "mu1_xi",
    "halfline_neumann_operator",
    "halfline_mu1",
    "theta0",
    "trapezoid",
]


@dataclass(frozen=True)
class Material:
    """Normal-material coupling ``a`` and conductivity ratio ``m``."""

    a: float
    m: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a > 0):
            raise ValueError(f"a must be positive, got {self.a!r}")
        if not (np.isfinite(self.m) and self.m > 0):
            raise ValueError(f"m must be positive, got {self.m!r}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "m", float(self.m))


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on ``[lo, hi]`` with ``n`` cells and a node at ``t = 0``."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if not (self.lo <= 0.0 < self.hi):
            raise ValueError("grid must satisfy lo <= 0 < hi")
        if int(self.n) != self.n or self.n < 16:
            raise ValueError("grid needs at least 16 cells")
        object.__setattr__(self, "n", int(self.n))
        h = self.h
        if not h > 0:
            raise ValueError("grid spacing must be positive")
        k = -self.lo / h
        if abs(k - round(k)) > 1e-9 * max(1.0, k):
            raise ValueError("t = 0 must coincide with a grid node")

    @classmethod
    def from_spacing(cls, lo: float, hi: float, h: float) -> "Grid1D":
        if not h > 0:
            raise ValueError("grid spacing must be positive")
        n = round((hi - lo) / h)
        if abs(n * h - (hi - lo)) > 1e-9 * (hi - lo):
            raise ValueError("spacing must divide the interval length")
        return cls(lo, hi, n)

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def nodes(self) -> np.ndarray:
        t = self.lo + self.h * np.arange(self.n + 1)
        t[self.zero_index] = 0.0
        return t

    @property
    def zero_index(self) -> int:
        return int(round(-self.lo / self.h))

    def refined(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.lo, self.hi, self.n * factor)

    def enlarged(self, lo: float, hi: float) -> "Grid1D":
        return Grid1D.from_spacing(lo, hi, self.h)


DEFAULT_GRID = Grid1D(-12.0, 12.0, 2400)


@dataclass(frozen=True)
class ModelParams:
    material: Material
    alpha: float
    xi: float

    def __post_init__(self):
        # alpha = 0 (the plain harmonic oscillator when m = 1) is admitted
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("alpha must be nonnegative")


@dataclass(frozen=True)
class Eigenpair1D:
    """Discrete eigenpair with the vector on all grid nodes (zero at the ends).

    The vector is normalized in the trapezoid L2 norm.
    """

    value: float
    vector: np.ndarray = field(repr=False)
    residual: float
    grid: Grid1D


def trapezoid(values: np.ndarray, h: float) -> float:
    """Trapezoid rule for nodal values on a uniform grid."""
    return float(h * (values.sum() - 0.5 * (values[0] + values[-1])))


def node_weights(grid: Grid1D, m: float) -> np.ndarray:
    """Nodal kinetic weight: 1/m left, 1 right, the average at the interface."""
    t = grid.nodes
    w = np.where(t < 0.0, 1.0 / m, 1.0)
    w[grid.zero_index] = 0.5 * (1.0 + 1.0 / m)
    return w


def node_potential(grid: Grid1D, a: float) -> np.ndarray:
    """Nodal electric potential: a left, -1 right, the average at the interface."""
    t = grid.nodes
    v = np.where(t < 0.0, a, -1.0)
    v[grid.zero_index] = 0.5 * (a - 1.0)
    return v


def face_weights(grid: Grid1D, m: float) -> np.ndarray:
    """Kinetic weight on the ``n`` cell faces (midpoints between nodes)."""
    mid = grid.nodes[:-1] + 0.5 * grid.h
    return np.where(mid < 0.0, 1.0 / m, 1.0)


def assemble_model_operator(params: ModelParams, grid: Grid1D) -> SymTridiagonal:
    """Flux-form matrix of the model operator on the interior nodes of ``grid``.

    Dirichlet conditions are imposed at ``lo`` and ``hi`` by dropping those
    nodes.  Row ``i`` corresponds to node ``i + 1`` of the grid.
    """
    h = grid.h
    if not h > 0:
        raise ValueError("grid spacing must be positive")
    mat = params.material
    t = grid.nodes
    wf = face_weights(grid, mat.m)
    w = node_weights(grid, mat.m)
    v = node_potential(grid, mat.a)
    pot = w * (t - params.xi) ** 2 + params.alpha * v
    diag = (wf[:-1] + wf[1:]) / h**2 + pot[1:-1]
    off = -wf[1:-1] / h**2
    return SymTridiagonal(diag, off)


def ground_state(params: ModelParams, grid: Grid1D = DEFAULT_GRID, tol: float = 1e-12) -> Eigenpair1D:
    """Lowest eigenpair of the model operator, vector on all nodes."""
    pair = lowest_eigenpair(assemble_model_operator(params, grid), tol)
    u = np.zeros(grid.n + 1)
    u[1:-1] = pair.vector / np.sqrt(grid.h)
    return Eigenpair1D(pair.value, u, pair.residual, grid)


@lru_cache(maxsize=65536)
def _mu1_cached(a, m, alpha, xi, lo, hi, n):
    params = ModelParams(Material(a, m), alpha, xi)
    return lowest_eigenpair(assemble_model_operator(params, Grid1D(lo, hi, n))).value


def mu1_xi(material: Material, alpha: float, xi: float, resolution: Grid1D = DEFAULT_GRID) -> float:
    """Discrete lowest eigenvalue ``mu_1(a, m, alpha; xi)``."""
    if not alpha >= 0:
        raise ValueError("alpha must be nonnegative")
    g = resolution
    return _mu1_cached(material.a, material.m, float(alpha), float(xi), g.lo, g.hi, g.n)


# --- half-line Neumann problem -------------------------------------------------


def _halfline_grid(resolution: Grid1D) -> tuple[np.ndarray, float]:
    h = resolution.h
    n = int(round(resolution.hi / h))
    return h * np.arange(n + 1), h


def halfline_neumann_operator(xi: float, resolution: Grid1D = DEFAULT_GRID) -> SymTridiagonal:
    """Symmetrized flux-form matrix of ``-u'' + (t - xi)^2 u`` on ``[0, hi]``.

    Neumann at ``t = 0`` (half control cell), Dirichlet at ``hi``.  The
    unknowns are ``sqrt(mass) * u`` so the matrix is symmetric and its
    eigenvectors are trapezoid-normalized when Euclidean-normalized.
    """
    t, h = _halfline_grid(resolution)
    t = t[:-1]
    mass = np.full(t.size, h)
    mass[0] = 0.5 * h
    stiff_diag = np.full(t.size, 2.0 / h)
    stiff_diag[0] = 1.0 / h
    diag = stiff_diag / mass + (t - xi) ** 2
    off = -(1.0 / h) / np.sqrt(mass[:-1] * mass[1:])
    return SymTridiagonal(diag, off)


def halfline_mu1(xi: float, resolution: Grid1D = DEFAULT_GRID) -> float:
    return lowest_eigenpair(halfline_neumann_operator(xi, resolution)).value


def halfline_ground_state(xi: float, resolution: Grid1D = DEFAULT_GRID) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and trapezoid-normalized ground state of the half-line problem."""
    t, h = _halfline_grid(resolution)
    pair = lowest_eigenpair(halfline_neumann_operator(xi, resolution))
    mass = np.full(t.size - 1, h)
    mass[0] = 0.5 * h
    u = np.zeros(t.size)
    u[:-1] = pair.vector / np.sqrt(mass)
    return t, u


def golden_section(f, lo: float, hi: float, tol: float = 1e-8, max_iter: int = 200) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[lo, hi]``; returns (argmin, min)."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = c if fc <= fd else d
    return x, min(fc, fd)


@lru_cache(maxsize=64)
def _theta0_cached(lo, hi, n, scan_step):
    grid = Grid1D(lo, hi, n)
    xs = np.arange(0.0, 2.0 + 0.5 * scan_step, scan_step)
    vals = np.array([halfline_mu1(x, grid) for x in xs])
    i = int(np.argmin(vals))
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, xs.size - 1)]
    x, val = golden_section(lambda s: halfline_mu1(s, grid), a, b, tol=1e-7)
    return x, val


def theta0(resolution: Grid1D = DEFAULT_GRID, scan_step: float = 0.05, extrapolate: bool = False) -> float:
    """de Gennes constant: minimum over xi of the half-line Neumann ground energy.

    Only ``resolution.h`` and ``resolution.hi`` are used.  With
    ``extrapolate`` the values at ``h`` and ``h/2`` are Richardson-combined.
    """
    g = resolution
    val = _theta0_cached(g.lo, g.hi, g.n, scan_step)[1]
    if not extrapolate:
        return val
    fine = g.refined()
    val2 = _theta0_cached(fine.lo, fine.hi, fine.n, scan_step)[1]
    return (4.0 * val2 - val) / 3.0


def theta0_minimizer(resolution: Grid1D = DEFAULT_GRID, scan_step: float = 0.05) -> float:
    g = resolution
    return _theta0_cached(g.lo, g.hi, g.n, scan_step)[0]


__all__ += ["golden_section", "halfline_ground_state", "node_weights", "node_potential", "face_weights", "theta0_minimizer", "ConvergenceError"]
