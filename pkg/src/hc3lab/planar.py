"""Lowest eigenvalue of the planar magnetic operator with a discontinuous conductor.

The operator is ``-div_{BF}(w grad_{BF}) + alpha B V`` on the outer domain,
with ``w = 1, V = -1`` inside the superconductor and ``w = 1/m, V = a`` in the
surrounding normal shell.  Two solvers are provided:

* an angular Fourier decomposition for concentric discs, reducing the problem
  to one radial tridiagonal eigenproblem per angular mode ``n``;
* a gauge-covariant finite-difference discretization on a masked Cartesian
  grid (Peierls link phases), for discs, ellipses and smooth closed curves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh, splu
from scipy.spatial import cKDTree

from .band import DEFAULT_SCAN, band_profile
from .model1d import DEFAULT_GRID, Material
from .tridiag import ConvergenceError, SymTridiagonal, lowest_eigenpair

__all__ = [
    "Geometry",
    "concentric_discs",
    "ellipse_pair",
    "curve_pair",
    "CartesianGrid",
    "FField",
    "reference_field",
    "PlanarEig",
    "assemble_planar_operator",
    "mu1_2d_fd",
    "mu1_disc_fourier",
    "disc_mode_energy",
    "disc_expansion_fit",
    "delta_of_mode",
]

# ---------------------------------------------------------------------------
# geometry


def _ray_cast(px, py, poly):
    """Even-odd point-in-polygon test, vectorized over points."""
    x = np.asarray(px, float)
    y = np.asarray(py, float)
    inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
    xs, ys = poly[:, 0], poly[:, 1]
    xs2, ys2 = np.roll(xs, -1), np.roll(ys, -1)
    for x1, y1, x2, y2 in zip(xs, ys, xs2, ys2):
        cond = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= cond & (x < xint)
    return inside


def _polyline_curvature(pts):
    """Curvature at each vertex of a closed polyline from circumscribed circles."""
    p0, p1, p2 = np.roll(pts, 1, axis=0), pts, np.roll(pts, -1, axis=0)
    a = np.linalg.norm(p1 - p0, axis=1)
    b = np.linalg.norm(p2 - p1, axis=1)
    c = np.linalg.norm(p2 - p0, axis=1)
    cross = (p1 - p0)[:, 0] * (p2 - p1)[:, 1] - (p1 - p0)[:, 1] * (p2 - p1)[:, 0]
    return 2.0 * cross / (a * b * c)


@dataclass(frozen=True)
class Geometry:
    """Superconductor ``inner`` strictly inside the outer domain ``outer``.

    ``concentric_discs``: ``inner = (R,)``, ``outer = (R_out,)``.
    ``ellipse_pair``: semi-axes ``inner = (a, b)``, ``outer = (A, B)``, centered at 0.
    ``mesh``: closed counter-clockwise polylines (arrays of shape ``(k, 2)``)
    sampling smooth curves.
    """

    kind: str
    inner: tuple
    outer: tuple
    curvature_max: float

    def __post_init__(self):
        if self.kind not in ("concentric_discs", "ellipse_pair", "mesh"):
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        pts = self.inner_boundary(512)
        if not np.all(self.inside_outer(pts[:, 0], pts[:, 1])):
            raise ValueError("the superconductor must lie strictly inside the outer domain")
        outer_pts = self.outer_boundary(512)
        if np.any(self.inside_inner(outer_pts[:, 0], outer_pts[:, 1])):
            raise ValueError("the superconductor must lie strictly inside the outer domain")

    def __hash__(self):
        return hash((self.kind, repr(self.inner), repr(self.outer)))

    def __eq__(self, other):
        return isinstance(other, Geometry) and hash(self) == hash(other)

    def _inside(self, shape, x, y):
        if self.kind == "concentric_discs":
            return x**2 + y**2 < shape[0] ** 2
        if self.kind == "ellipse_pair":
            return (x / shape[0]) ** 2 + (y / shape[1]) ** 2 < 1.0
        return _ray_cast(x, y, np.asarray(shape[0]))

    def inside_inner(self, x, y):
        return self._inside(self.inner, np.asarray(x, float), np.asarray(y, float))

    def inside_outer(self, x, y):
        return self._inside(self.outer, np.asarray(x, float), np.asarray(y, float))

    def _boundary(self, shape, n):
        s = 2.0 * np.pi * np.arange(n) / n
        if self.kind == "concentric_discs":
            return shape[0] * np.column_stack([np.cos(s), np.sin(s)])
        if self.kind == "ellipse_pair":
            return np.column_stack([shape[0] * np.cos(s), shape[1] * np.sin(s)])
        return np.asarray(shape[0], float)

    def inner_boundary(self, n: int = 4096) -> np.ndarray:
        return self._boundary(self.inner, n)

    def outer_boundary(self, n: int = 4096) -> np.ndarray:
        return self._boundary(self.outer, n)

    def bounding_box(self) -> tuple[float, float, float, float]:
        pts = self.outer_boundary(4096)
        return pts[:, 0].min(), pts[:, 0].max(), pts[:, 1].min(), pts[:, 1].max()

    def inner_normal(self, x, y) -> np.ndarray:
        """Unit normal of the inner boundary near the points (x, y), shape (k, 2)."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if self.kind == "concentric_discs":
            g = np.column_stack([x, y])
        elif self.kind == "ellipse_pair":
            a, b = self.inner
            g = np.column_stack([x / a**2, y / b**2])
        else:
            pts = self.inner_boundary()
            _, idx = cKDTree(pts).query(np.column_stack([x, y]))
            tangent = np.roll(pts, -1, axis=0)[idx] - np.roll(pts, 1, axis=0)[idx]
            g = np.column_stack([tangent[:, 1], -tangent[:, 0]])
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    def curvature_maximizers(self) -> np.ndarray:
        """Points of the inner boundary where its curvature is maximal."""
        pts = self.inner_boundary(4096)
        if self.kind == "concentric_discs":
            return pts
        k = _polyline_curvature(pts)
        return pts[k >= k.max() - 1e-6 * abs(k.max())]


def concentric_discs(r_inner: float = 1.0, r_outer: float = 1.5) -> Geometry:
    if not 0 < r_inner < r_outer:
        raise ValueError("need 0 < r_inner < r_outer")
    return Geometry("concentric_discs", (float(r_inner),), (float(r_outer),), 1.0 / r_inner)


def ellipse_pair(inner=(1.0, 0.7), outer=(1.3, 1.0)) -> Geometry:
    a, b = map(float, inner)
    if not (a > 0 and b > 0):
        raise ValueError("semi-axes must be positive")
    kmax = max(a / b**2, b / a**2)
    return Geometry("ellipse_pair", (a, b), tuple(map(float, outer)), kmax)


def curve_pair(inner_pts, outer_pts) -> Geometry:
    """Geometry from two closed, counter-clockwise polylines sampling smooth curves."""
    inner_pts = np.asarray(inner_pts, float)
    outer_pts = np.asarray(outer_pts, float)
    kmax = float(np.max(_polyline_curvature(inner_pts)))
    return Geometry("mesh", (inner_pts,), (outer_pts,), kmax)


# ---------------------------------------------------------------------------
# Cartesian grid, masks, and the reference potential


@dataclass(frozen=True)
class CartesianGrid:
    """Node grid ``x0 + i h, y0 + j h`` for ``0 <= i < nx``, ``0 <= j < ny``."""

    x0: float
    y0: float
    h: float
    nx: int
    ny: int

    @classmethod
    def covering(cls, geometry: Geometry, points_per_unit: float) -> "CartesianGrid":
        xmin, xmax, ymin, ymax = geometry.bounding_box()
        h = 1.0 / points_per_unit
        pad = 1.5 * h
        nx = int(np.ceil((xmax - xmin + 2 * pad) / h)) + 1
        ny = int(np.ceil((ymax - ymin + 2 * pad) / h)) + 1
        # center the node lattice on the bounding box so symmetric domains stay symmetric
        x0 = 0.5 * (xmin + xmax) - 0.5 * (nx - 1) * h
        y0 = 0.5 * (ymin + ymax) - 0.5 * (ny - 1) * h
        return cls(float(x0), float(y0), float(h), nx, ny)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.h * np.arange(self.ny)

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="xy")  # arrays of shape (ny, nx)


def _fraction_inside(geometry, xs, ys, h, subsamples):
    """Area fraction of the squares ``[x +- h/2] x [y +- h/2]`` inside the superconductor."""
    s = (np.arange(subsamples) + 0.5) / subsamples - 0.5
    sx, sy = np.meshgrid(s * h, s * h)
    px = xs[:, None] + sx.ravel()[None, :]
    py = ys[:, None] + sy.ravel()[None, :]
    return geometry.inside_inner(px, py).mean(axis=1)


@dataclass(frozen=True)
class Discretization:
    """Masks, edges and coefficient fields shared by the planar and GL solvers."""

    geometry: Geometry
    grid: CartesianGrid
    active: np.ndarray = field(repr=False)  # (ny, nx) bool, node inside the outer domain
    index: np.ndarray = field(repr=False)  # (ny, nx) int, -1 if inactive
    nodes_x: np.ndarray = field(repr=False)
    nodes_y: np.ndarray = field(repr=False)
    inner_fraction: np.ndarray = field(repr=False)  # per active node, area fraction in Omega
    edges: np.ndarray = field(repr=False)  # (E, 2) node indices, i -> j
    edge_dir: np.ndarray = field(repr=False)  # 0 horizontal, 1 vertical
    edge_ij: np.ndarray = field(repr=False)  # (E, 2) grid (i, j) of the edge's start node
    edge_inner_fraction: np.ndarray = field(repr=False)
    edge_normal_sq: np.ndarray = field(repr=False)  # squared normal component along the edge

    @property
    def n(self) -> int:
        return int(self.nodes_x.size)

    def edge_weights(self, m: float) -> np.ndarray:
        """Kinetic weight per edge, smoothed anisotropically near the interface.

        Over the square of side h centered on the edge, the harmonic mean of
        w applies to the flux component normal to the interface and the
        arithmetic mean to the tangential one.  Away from the interface this
        is just w.
        """
        th = self.edge_inner_fraction
        harmonic = 1.0 / (th + (1.0 - th) * m)
        arithmetic = th + (1.0 - th) / m
        nn = self.edge_normal_sq
        return nn * harmonic + (1.0 - nn) * arithmetic

    def node_potential(self, a: float) -> np.ndarray:
        f = self.inner_fraction
        return -f + a * (1.0 - f)

    def node_weight(self, m: float) -> np.ndarray:
        f = self.inner_fraction
        return f + (1.0 - f) / m


@lru_cache(maxsize=16)
def discretize(geometry: Geometry, points_per_unit: float, subsamples: int = 8) -> Discretization:
    grid = CartesianGrid.covering(geometry, points_per_unit)
    X, Y = grid.mesh()
    active = geometry.inside_outer(X, Y)
    index = -np.ones(active.shape, dtype=np.int64)
    index[active] = np.arange(int(active.sum()))
    nx_, ny_ = X[active], Y[active]
    h = grid.h

    inside = geometry.inside_inner(nx_, ny_)
    frac = inside.astype(float)
    # cells whose corners disagree straddle the interface
    corners = [geometry.inside_inner(nx_ + dx, ny_ + dy) for dx in (-h / 2, h / 2) for dy in (-h / 2, h / 2)]
    corners = np.array(corners)
    mixed = ~(np.all(corners == inside[None, :], axis=0))
    if np.any(mixed):
        frac[mixed] = _fraction_inside(geometry, nx_[mixed], ny_[mixed], h, subsamples)

    edges, dirs, ij = [], [], []
    jj, ii = np.nonzero(active[:, :-1] & active[:, 1:])
    edges.append(np.column_stack([index[jj, ii], index[jj, ii + 1]]))
    dirs.append(np.zeros(ii.size, dtype=np.int8))
    ij.append(np.column_stack([ii, jj]))
    jj, ii = np.nonzero(active[:-1, :] & active[1:, :])
    edges.append(np.column_stack([index[jj, ii], index[jj + 1, ii]]))
    dirs.append(np.ones(ii.size, dtype=np.int8))
    ij.append(np.column_stack([ii, jj]))
    edges = np.concatenate(edges)
    dirs = np.concatenate(dirs)
    ij = np.concatenate(ij)

    xa, ya = nx_[edges[:, 0]], ny_[edges[:, 0]]
    mx = xa + 0.5 * h * (dirs == 0)
    my = ya + 0.5 * h * (dirs == 1)
    mid_in = geometry.inside_inner(mx, my)
    efrac = mid_in.astype(float)
    nsq = np.ones(edges.shape[0])
    corners = np.array([geometry.inside_inner(mx + dx, my + dy) for dx in (-h / 2, h / 2) for dy in (-h / 2, h / 2)])
    near = ~np.all(corners == mid_in[None, :], axis=0)
    if np.any(near):
        efrac[near] = _fraction_inside(geometry, mx[near], my[near], h, 2 * subsamples)
        normal = geometry.inner_normal(mx[near], my[near])
        nsq[near] = np.where(dirs[near] == 0, normal[:, 0], normal[:, 1]) ** 2
    return Discretization(geometry, grid, active, index, nx_, ny_, frac, edges, dirs, ij, efrac, nsq)


@dataclass(frozen=True)
class FField:
    """Reference potential F with curl F = 1.

    ``kind = "closed_form"``: F = x_perp / 2 for the disc, the linear field of
    the quadratic stream function for the ellipse.  ``kind = "stream"``:
    discrete stream function ``phi`` on the plaquettes (cell centers) of the
    grid, F = (-d_y phi, d_x phi).  Either way F is exposed through its exact
    line integrals along grid edges.
    """

    kind: str
    grid: CartesianGrid
    coefficients: tuple = ()  # closed form: (cx, cy) with F = (-cy * y, cx * x)
    phi: np.ndarray | None = field(default=None, repr=False)  # (ny + 1, nx + 1) plaquette values
    residual: float = 0.0

    def edge_integrals(self, disc: "Discretization") -> np.ndarray:
        """Line integral of F along each edge of ``disc`` (start -> end node)."""
        h = self.grid.h
        i, j = disc.edge_ij[:, 0], disc.edge_ij[:, 1]
        horizontal = disc.edge_dir == 0
        if self.kind == "closed_form":
            cx, cy = self.coefficients
            xa = self.grid.x0 + h * i
            ya = self.grid.y0 + h * j
            # midpoint rule is exact for a linear field
            return np.where(horizontal, -cy * ya * h, cx * xa * h)
        phi = self.phi
        # plaquette (p, q) has lower-left node (p - 1, q - 1) in the padded array
        out = np.empty(i.size)
        hi_, hj = i[horizontal], j[horizontal]
        out[horizontal] = -(phi[hj + 1, hi_ + 1] - phi[hj, hi_ + 1])
        vi, vj = i[~horizontal], j[~horizontal]
        out[~horizontal] = phi[vj + 1, vi + 1] - phi[vj + 1, vi]
        return out


def _closed_form_coefficients(geometry: Geometry):
    if geometry.kind == "concentric_discs":
        return 0.5, 0.5
    if geometry.kind == "ellipse_pair":
        A, B = geometry.outer
        c = 0.5 / (1.0 / A**2 + 1.0 / B**2)
        return 2.0 * c / A**2, 2.0 * c / B**2
    return None


def reference_field(geometry: Geometry, grid: CartesianGrid, method: str = "auto") -> FField:
    """Potential with unit curl, tangential on the outer boundary.

    ``auto`` uses the closed form for the disc and the discrete stream-function
    solve otherwise; ``closed_form`` and ``stream`` force one path.
    """
    curvature_limit = 0.25
    if grid.h * geometry.curvature_max > curvature_limit:
        need = int(np.ceil(geometry.curvature_max / curvature_limit))
        raise ConvergenceError(
            f"grid spacing {grid.h:.4g} does not resolve boundary curvature "
            f"{geometry.curvature_max:.4g}; use at least {need} points per unit length"
        )
    if method not in ("auto", "closed_form", "stream"):
        raise ValueError(f"unknown field method {method!r}")
    coeffs = _closed_form_coefficients(geometry)
    if method == "closed_form" or (method == "auto" and geometry.kind == "concentric_discs"):
        if coeffs is None:
            raise ValueError("no closed form for this geometry")
        return FField("closed_form", grid, coeffs)
    # plaquette centers, padded by one ring so every edge has two neighbors
    h = grid.h
    px = grid.x0 - 0.5 * h + h * np.arange(grid.nx + 1)
    py = grid.y0 - 0.5 * h + h * np.arange(grid.ny + 1)
    PX, PY = np.meshgrid(px, py, indexing="xy")
    X, Y = grid.mesh()
    active = geometry.inside_outer(X, Y)
    # a plaquette is solved for when any of its corners is an active node
    pad = np.zeros((grid.ny + 2, grid.nx + 2), dtype=bool)
    pad[1:-1, 1:-1] = active
    touched = pad[:-1, :-1] | pad[1:, :-1] | pad[:-1, 1:] | pad[1:, 1:]
    touched[0, :] = touched[-1, :] = False
    touched[:, 0] = touched[:, -1] = False
    idx = -np.ones(touched.shape, dtype=np.int64)
    idx[touched] = np.arange(int(touched.sum()))
    rows, cols, vals = [], [], []
    q, p = np.nonzero(touched)
    k = idx[q, p]
    rows.append(k)
    cols.append(k)
    vals.append(np.full(k.size, -4.0))
    for dq, dp in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        nb = idx[q + dq, p + dp]
        ok = nb >= 0
        rows.append(k[ok])
        cols.append(nb[ok])
        vals.append(np.ones(int(ok.sum())))
    n = k.size
    lap = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    rhs = np.full(n, h * h)
    sol = splu(lap).solve(rhs)
    residual = float(np.max(np.abs(lap @ sol - rhs)) / (h * h))
    phi = np.zeros(touched.shape)
    phi[touched] = sol
    del PX, PY
    return FField("stream", grid, (), phi, residual)


def plaquette_curl(field_: FField, disc: Discretization) -> np.ndarray:
    """Circulation / h^2 on every plaquette whose four corners are active."""
    A = field_.edge_integrals(disc)
    return _plaquette_circulation(disc, A) / disc.grid.h**2


def _plaquette_circulation(disc: Discretization, A: np.ndarray) -> np.ndarray:
    ny, nx = disc.active.shape
    H = np.full((ny, nx - 1), np.nan)
    V = np.full((ny - 1, nx), np.nan)
    hmask = disc.edge_dir == 0
    i, j = disc.edge_ij[:, 0], disc.edge_ij[:, 1]
    H[j[hmask], i[hmask]] = A[hmask]
    V[j[~hmask], i[~hmask]] = A[~hmask]
    circ = H[:-1, :] + V[:, 1:] - H[1:, :] - V[:, :-1]
    return circ[np.isfinite(circ)]


def node_divergence(field_: FField, disc: Discretization) -> np.ndarray:
    """Sum of outgoing edge integrals / h^2 at nodes with all four edges present."""
    A = field_.edge_integrals(disc)
    div = np.zeros(disc.n)
    np.add.at(div, disc.edges[:, 0], A)
    np.add.at(div, disc.edges[:, 1], -A)
    deg = np.zeros(disc.n, dtype=int)
    np.add.at(deg, disc.edges[:, 0], 1)
    np.add.at(deg, disc.edges[:, 1], 1)
    return div[deg == 4] / disc.grid.h**2


# ---------------------------------------------------------------------------
# finite-difference eigenvalue


@dataclass(frozen=True)
class PlanarEig:
    B: float
    alpha: float
    mu1: float
    winning_mode: int | None
    delta: float | None
    boundary_mass_fraction: float
    method: str = ""
    h: float = float("nan")
    vector: np.ndarray | None = field(default=None, repr=False, compare=False)

    def record(self) -> dict:
        return {
            "B": self.B,
            "mu1": self.mu1,
            "winning_mode": self.winning_mode,
            "delta": self.delta,
            "boundary_mass_fraction": self.boundary_mass_fraction,
        }


def assemble_planar_operator(
    disc: Discretization,
    material: Material,
    B: float,
    alpha: float,
    field_: FField,
    gauge: np.ndarray | None = None,
) -> sp.csr_matrix:
    """Hermitian matrix ``L / h^2 + alpha B diag(V)`` with Peierls link phases.

    ``gauge`` optionally adds the discrete gradient of a nodal function chi to
    the edge integrals (a gauge transformation of F).
    """
    A = field_.edge_integrals(disc)
    if gauge is not None:
        A = A + gauge[disc.edges[:, 1]] - gauge[disc.edges[:, 0]]
    theta = B * A
    w = disc.edge_weights(material.m)
    i, j = disc.edges[:, 0], disc.edges[:, 1]
    n = disc.n
    h2 = disc.grid.h**2
    diag = np.zeros(n)
    np.add.at(diag, i, w)
    np.add.at(diag, j, w)
    diag = diag / h2 + alpha * B * disc.node_potential(material.a)
    off = -w * np.exp(-1j * theta) / h2
    mat = sp.coo_matrix(
        (np.concatenate([diag.astype(complex), off, np.conj(off)]),
         (np.concatenate([np.arange(n), i, j]), np.concatenate([np.arange(n), j, i]))),
        shape=(n, n),
    )
    return mat.tocsr()


def _distance_to_inner_boundary(geometry: Geometry, x, y):
    if geometry.kind == "concentric_discs":
        return np.abs(np.hypot(x, y) - geometry.inner[0])
    pts = geometry.inner_boundary(8192)
    d, _ = cKDTree(pts).query(np.column_stack([x, y]))
    return d


def _lowest_hermitian(mat, scale: float, max_restarts: int = 3, k: int = 4, estimate: float | None = None, v0=None):
    """Lowest eigenpair of a Hermitian matrix bounded below by ``-scale``.

    A first shift-invert pass from the guaranteed lower bound ``-scale - 1``
    locates the bottom of the spectrum; it is only an estimate because the
    shifted-inverted eigenvalues are poorly separated that far from the
    spectrum.  The second pass shifts just below the estimate, where the
    lowest eigenvalue dominates.  A caller-supplied ``estimate`` (e.g. from
    a nearby parameter value) replaces the first pass.
    """
    n = mat.shape[0]
    v0 = np.ones(n, dtype=complex) if v0 is None else np.asarray(v0, complex)
    if estimate is None:
        sigma, stages = -scale - 1.0, 2
    else:
        sigma, stages = estimate - 1e-2 * max(1.0, abs(estimate)), 1
    for stage in range(stages):
        ncv = max(2 * k + 1, 20)
        for _ in range(max_restarts + 1):
            try:
                vals, vecs = eigsh(mat, k=k, sigma=sigma, which="LM", v0=v0, ncv=ncv, tol=1e-12, maxiter=5000)
                break
            except ArpackNoConvergence:
                ncv *= 2
        else:
            raise ConvergenceError(f"shift-invert Lanczos failed after {max_restarts} restarts")
        i = int(np.argmin(vals.real))
        lowest, vec = float(vals[i].real), vecs[:, i]
        spread = float(np.ptp(vals.real)) if k > 1 else 1.0
        sigma = lowest - max(0.1 * spread, 1e-3 * max(1.0, abs(lowest)))
        v0 = vec
    return lowest, vec


def default_points_per_unit(B: float, geometry: Geometry | None = None) -> float:
    ppu = max(48.0, 6.0 * np.sqrt(max(B, 0.0)))
    if geometry is not None:
        ppu = max(ppu, 4.0 * geometry.curvature_max)
    return ppu


def mu1_2d_fd(
    geometry: Geometry,
    material: Material,
    B: float,
    alpha: float,
    points_per_unit: float | None = None,
    field_method: str = "auto",
    gauge=None,
    return_vector: bool = False,
    max_restarts: int = 3,
    estimate: float | None = None,
    v0: np.ndarray | None = None,
) -> PlanarEig:
    """Lowest eigenvalue on a masked Cartesian grid by shift-invert Lanczos.

    ``gauge`` may be a callable ``chi(x, y)``; the potential becomes F + grad chi.
    ``estimate`` and ``v0`` (a nearby eigenvalue and eigenvector on the same
    grid) skip the locating pass of the eigensolver.
    """
    if B < 0 or not alpha > 0:
        raise ValueError("need B >= 0 and alpha > 0")
    ppu = points_per_unit or default_points_per_unit(B, geometry)
    disc = discretize(geometry, float(ppu))
    fld = reference_field(geometry, disc.grid, field_method)
    chi = None if gauge is None else np.asarray(gauge(disc.nodes_x, disc.nodes_y), float)
    mat = assemble_planar_operator(disc, material, B, alpha, fld, chi)
    vals, vecs = _lowest_hermitian(mat, alpha * B, max_restarts, estimate=estimate, v0=v0)
    psi = vecs / np.linalg.norm(vecs)
    dist = _distance_to_inner_boundary(geometry, disc.nodes_x, disc.nodes_y)
    layer = dist <= 5.0 / np.sqrt(B) if B > 0 else np.ones(disc.n, bool)
    frac = float(np.sum(np.abs(psi[layer]) ** 2))
    return PlanarEig(
        B=float(B),
        alpha=float(alpha),
        mu1=float(vals),
        winning_mode=None,
        delta=None,
        boundary_mass_fraction=min(max(frac, 0.0), 1.0),
        method="fd",
        h=disc.grid.h,
        vector=psi if return_vector else None,
    )


def curvature_point_mass(geometry: Geometry, eig: PlanarEig, points_per_unit: float, arc: float = 0.3) -> float:
    """Eigenvector mass at nodes whose nearest inner-boundary point lies within
    arc length ``arc`` of a curvature maximizer."""
    if eig.vector is None:
        raise ValueError("eigenvector not stored; call mu1_2d_fd(..., return_vector=True)")
    disc = discretize(geometry, float(points_per_unit))
    pts = geometry.inner_boundary(8192)
    seg = np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)[:-1]])
    total = seg.sum()
    kappa = _polyline_curvature(pts)
    s_max = s[kappa >= kappa.max() - 1e-6 * abs(kappa.max())]
    _, idx = cKDTree(pts).query(np.column_stack([disc.nodes_x, disc.nodes_y]))
    ds = np.abs(s[idx][:, None] - s_max[None, :])
    ds = np.minimum(ds, total - ds).min(axis=1)
    return float(np.sum(np.abs(eig.vector[ds <= arc]) ** 2))


# ---------------------------------------------------------------------------
# Fourier path for concentric discs


def delta_of_mode(n: int, B: float, xi_star: float) -> float:
    """Offset of angular mode ``n`` from the optimal (real) mode ``B/2 - xi sqrt(B)``."""
    return float(n - 0.5 * B + xi_star * np.sqrt(B))


@dataclass(frozen=True)
class RadialGrid:
    rho_min: float
    rho_max: float
    h: float

    @property
    def nodes(self) -> np.ndarray:
        # rho = 1 (the interface) is a node
        k_lo = int(round((1.0 - self.rho_min) / self.h))
        k_hi = int(round((self.rho_max - 1.0) / self.h))
        return 1.0 + self.h * np.arange(-k_lo, k_hi + 1)


def _radial_operator(n, B, alpha, material, rgrid: RadialGrid, r_inner):
    """Symmetrized flux-form radial matrix for angular mode n, unknowns sqrt(rho h) g."""
    h = rgrid.h
    rho = rgrid.nodes * r_inner
    h = h * r_inner
    origin = abs(rho[0]) < 0.5 * h
    inside = rho < r_inner
    m, a = material.m, material.a
    w_node = np.where(inside, 1.0, 1.0 / m)
    v_node = np.where(inside, -1.0, a)
    k1 = int(np.argmin(np.abs(rho - r_inner)))
    w_node[k1] = 0.5 * (1.0 + 1.0 / m)
    v_node[k1] = 0.5 * (a - 1.0)
    rf = 0.5 * (rho[:-1] + rho[1:])
    w_face = np.where(rf < r_inner, 1.0, 1.0 / m)
    flux = w_face * rf / h
    if origin and n == 0:
        # Neumann at the origin: the origin node owns the disc of radius h/2
        rho_i = rho[:-1]
        mass = rho_i * h
        mass[0] = h * h / 8.0
        stiff = np.zeros(rho_i.size)
        stiff[:] += flux[: rho_i.size]
        stiff[1:] += flux[: rho_i.size - 1]
        pot = w_node[:-1] * (0.5 * B * rho_i) ** 2 + alpha * B * v_node[:-1]
        diag = stiff / mass + pot
        off = -flux[: rho_i.size - 1] / np.sqrt(mass[:-1] * mass[1:])
        return SymTridiagonal(diag, off), rho_i, mass, w_node[:-1], v_node[:-1]
    # Dirichlet at both ends (the origin included when rho_min = 0 and n != 0)
    rho_i = rho[1:-1]
    mass = rho_i * h
    stiff = flux[:-1] + flux[1:]
    pot = w_node[1:-1] * (n / rho_i - 0.5 * B * rho_i) ** 2 + alpha * B * v_node[1:-1]
    diag = stiff / mass + pot
    off = -flux[1:-1] / np.sqrt(mass[:-1] * mass[1:])
    return SymTridiagonal(diag, off), rho_i, mass, w_node[1:-1], v_node[1:-1]


@dataclass(frozen=True)
class ModeEnergy:
    n: int
    value: float
    dB: float  # exact derivative of the discrete branch in B
    layer_mass: float  # mass within 5 B^(-1/2) of the interface


def disc_mode_energy(n: int, B: float, alpha: float, material: Material, rgrid: RadialGrid, r_inner: float = 1.0) -> ModeEnergy:
    """Radial ground energy of angular mode ``n`` and its Feynman-Hellmann B-derivative."""
    mat, rho, mass, w, v = _radial_operator(n, B, alpha, material, rgrid, r_inner)
    pair = lowest_eigenpair(mat)
    g2 = pair.vector**2  # mass-weighted |g|^2, sums to 1
    safe = np.where(rho > 0, rho, 1.0)
    dpot = w * 2.0 * (n / safe - 0.5 * B * rho) * (-0.5 * rho) + alpha * v
    dpot = np.where(rho > 0, dpot, alpha * v)
    d_b = float(np.sum(g2 * dpot))
    layer = np.abs(rho - r_inner) <= 5.0 / np.sqrt(B) if B > 0 else np.ones(rho.size, bool)
    return ModeEnergy(int(n), pair.value, d_b, float(np.sum(g2[layer])))


def radial_grid(geometry: Geometry, B: float, h_scaled: float = 0.02, rho_min: float | str = "auto", h_cap: float = 0.005) -> RadialGrid:
    """Radial grid in units of the inner radius; spacing ``h_scaled / sqrt(B)`` capped at ``h_cap``."""
    if geometry.kind != "concentric_discs":
        raise ValueError("the Fourier path needs concentric discs")
    r_in, r_out = geometry.inner[0], geometry.outer[0]
    if rho_min == "auto":
        rho_min = 0.0 if B < 100 else 0.5
    h = min(h_scaled / np.sqrt(max(B, 1.0)), h_cap)
    # make 1 - rho_min a multiple of h
    k = max(int(np.ceil((1.0 - rho_min) / h)), 1)
    h = (1.0 - rho_min) / k if rho_min < 1.0 else h
    return RadialGrid(float(rho_min), r_out / r_in, float(h))


@lru_cache(maxsize=64)
def _band_xi(a, m, alpha):
    prof = band_profile(Material(a, m), alpha, DEFAULT_SCAN, DEFAULT_GRID)
    return None if prof.edge_minimum else prof.xi_star


def _mode_window(B, xi, D, center=None):
    if center is None:
        center = 0.5 * B - (xi or 0.0) * np.sqrt(B)
    return int(np.ceil(center - D)), int(np.floor(center + D))


def _coarse_mode_center(Bs, alpha, material, rg):
    """Best mode of a strided scan over all n >= 0 that fit in the outer disc.

    Used when the band infimum is not attained (no interface-optimal mode):
    the ground state may then sit anywhere in the normal shell.  Negative n
    are never better than -n.
    """
    n_max = int(np.ceil(0.5 * Bs * rg.rho_max**2 + 2.0 * np.sqrt(Bs)))
    stride = max(1, int(np.sqrt(Bs) / 2))
    ns = np.arange(0, n_max + 1, stride)
    vals = [disc_mode_energy(int(n), Bs, alpha, material, rg).value for n in ns]
    return float(ns[int(np.argmin(vals))]), float(stride)


def mu1_disc_fourier(
    geometry: Geometry,
    material: Material,
    B: float,
    alpha: float,
    D: float = 12.0,
    h_scaled: float = 0.02,
    rho_min: float | str = "auto",
    extrapolate: bool = True,
    rgrid: RadialGrid | None = None,
    xi_star: float | None = None,
    max_widen: int = 4,
) -> PlanarEig:
    """Lowest eigenvalue on concentric discs as the minimum over angular modes.

    Modes with ``|delta(n, B)| <= D`` are solved; the window is doubled until
    the minimizing mode is interior.  When the band infimum is not attained
    (no interface-optimal mode) the window is centered by a strided scan over
    all modes.  With ``extrapolate`` each mode energy is
    Richardson-combined from the radial grid and its halving.
    """
    if geometry.kind != "concentric_discs":
        raise ValueError("the Fourier path needs concentric discs")
    if not alpha > 0 or B <= 0:
        raise ValueError("need B > 0 and alpha > 0")
    r_in = geometry.inner[0]
    Bs = B * r_in**2  # scaling to the unit inner radius
    if xi_star is None:
        xi_star = _band_xi(material.a, material.m, float(alpha))
    rg = rgrid or radial_grid(geometry, Bs, h_scaled, rho_min)
    rg_fine = RadialGrid(rg.rho_min, rg.rho_max, rg.h / 2.0)

    def energy(n):
        e = disc_mode_energy(n, Bs, alpha, material, rg)
        if not extrapolate:
            return e.value, e.layer_mass
        ef = disc_mode_energy(n, Bs, alpha, material, rg_fine)
        return (4.0 * ef.value - e.value) / 3.0, ef.layer_mass

    center = None
    width = D
    if xi_star is None:
        center, stride = _coarse_mode_center(Bs, alpha, material, rg)
        width = max(D, stride)
    cache: dict[int, tuple[float, float]] = {}
    for _ in range(max_widen + 1):
        lo, hi = _mode_window(Bs, xi_star, width, center)
        lo = max(lo, 0)
        for n in range(lo, hi + 1):
            if n not in cache:
                cache[n] = energy(n)
        ns = np.arange(lo, hi + 1)
        vals = np.array([cache[n][0] for n in ns])
        k = int(np.argmin(vals))
        if 0 < k < ns.size - 1 or (lo == 0 and k == 0 and ns.size > 1):
            break
        width *= 2.0
    else:
        raise ConvergenceError(f"minimizing angular mode stays at the window edge at B = {B}")
    n_star = int(ns[k])
    mu = float(vals[k]) / r_in**2
    delta = delta_of_mode(n_star, Bs, xi_star) if xi_star is not None else None
    return PlanarEig(
        B=float(B),
        alpha=float(alpha),
        mu1=mu,
        winning_mode=n_star,
        delta=delta,
        boundary_mass_fraction=float(min(max(cache[n_star][1], 0.0), 1.0)),
        method="fourier",
        h=rg.h * r_in,
    )


def disc_expansion_fit(material: Material, alpha: float, B_values, constants, geometry: Geometry | None = None, D: float = 3.0, h_scaled: float = 0.02) -> dict:
    """Fit the oscillatory remainder of the disc eigenvalue expansion.

    ``constants`` supplies beta, xi_star, C1, C2, delta0 and C0 at ``alpha``.
    The remainder ``mu_1 - beta B - C1 sqrt(B)`` is regressed on
    ``Delta_B^2`` where ``Delta_B = dist(B/2 - xi sqrt(B) + delta0, Z)``.  The
    opposite sign convention ``- C1 sqrt(B)`` is fitted too, and the better
    one reported.
    """
    geometry = geometry or concentric_discs()
    B = np.asarray(list(B_values), float)
    mu = np.array([
        mu1_disc_fourier(geometry, material, b, alpha, D=D, h_scaled=h_scaled, xi_star=constants.xi_star).mu1
        for b in B
    ])
    shift = 0.5 * B - constants.xi_star * np.sqrt(B) + constants.delta0
    dB = np.abs(shift - np.round(shift))
    x = dB**2
    out = {"B": B.tolist(), "mu1": mu.tolist(), "Delta_B": dB.tolist()}
    fits = {}
    for sign, label in ((1.0, "+C1"), (-1.0, "-C1")):
        resid = mu - constants.beta * B - sign * constants.C1 * np.sqrt(B)
        slope, offset = np.polyfit(x, resid, 1)
        corr = float(np.corrcoef(x, resid)[0, 1])
        fits[label] = {
            "residual": resid.tolist(),
            "slope": float(slope),
            "offset": float(offset),
            "correlation": corr,
            "residual_max_abs": float(np.max(np.abs(resid))),
        }
    observed = max(fits, key=lambda k: fits[k]["correlation"])
    best = fits["+C1"]
    out.update(
        residual=best["residual"],
        slope=best["slope"],
        offset=best["offset"],
        correlation=best["correlation"],
        residual_max_abs=best["residual_max_abs"],
        C2=constants.C2,
        C2_C0=constants.C2 * constants.C0,
        slope_rel_error=abs(best["slope"] - constants.C2) / abs(constants.C2),
        observed_sign=observed,
        alternative=fits["-C1"] if observed == "+C1" else fits["+C1"],
    )
    return out
