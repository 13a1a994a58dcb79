"""Discrete Ginzburg-Landau energy with a normal-metal shell, and its minimization.

Unknowns are the order parameter ``psi`` at the active nodes of a masked
Cartesian grid and one real phase per edge, the circulation
``theta_e = kappa H * int_e A . dl``.  With the covariant difference
``D_e = exp(-i theta_e) psi_j - psi_i`` the energy reads

    sum_e w_e |D_e|^2
    + kappa^2 h^2 sum_n (V_n |psi_n|^2 + f_n |psi_n|^4 / 2)
    + sum_p (c_p - kappa H h^2)^2 / h^2,

where ``f_n`` is the superconducting area fraction of the node cell,
``V_n = -f_n + a (1 - f_n)``, ``w_e`` the kinetic weight (1 in the
superconductor, 1/m in the shell) and ``c_p`` the circulation around
plaquette ``p``.  The quadratic part at ``(0, F)`` is exactly the planar
finite-difference operator at ``B = kappa H``, ``alpha = kappa / H``, and the
energy is invariant under discrete gauge transformations.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numba
import numpy as np

from .model1d import Material
from .planar import (
    Discretization,
    Geometry,
    _distance_to_inner_boundary,
    _lowest_hermitian,
    assemble_planar_operator,
    concentric_discs,
    discretize,
    reference_field,
)

__all__ = [
    "GLGrid",
    "GLState",
    "gl_energy",
    "gl_gradient",
    "minimize",
    "normal_state",
    "gauge_transform",
    "second_variation",
    "quadratic_form",
    "critical_point_diagnostics",
    "is_nontrivial",
]

log = logging.getLogger(__name__)

DEFAULT_NODES = 128
ENERGY_TOL = 1e-8
PSI_TOL = 1e-4


@dataclass(frozen=True, eq=False)
class GLGrid:
    """Masked grid, plaquettes, and the reference circulations of F."""

    disc: Discretization
    F_edges: np.ndarray = field(repr=False)  # int_e F . dl per edge
    plaquettes: np.ndarray = field(repr=False)  # (P, 4) edge indices
    plaquette_signs: np.ndarray = field(repr=False)  # (P, 4) +-1

    @property
    def geometry(self) -> Geometry:
        return self.disc.geometry

    @property
    def h(self) -> float:
        return self.disc.grid.h

    @property
    def n_nodes(self) -> int:
        return self.disc.n

    @property
    def n_edges(self) -> int:
        return int(self.disc.edges.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.disc.grid.nx, self.disc.grid.ny)

    @classmethod
    def build(cls, geometry: Geometry | None = None, nodes: int = DEFAULT_NODES) -> "GLGrid":
        """Grid with about ``nodes`` points across the bounding box of the outer domain."""
        geometry = geometry or concentric_discs()
        xmin, xmax, ymin, ymax = geometry.bounding_box()
        span = max(xmax - xmin, ymax - ymin)
        # CartesianGrid.covering pads by 1.5 h on each side
        ppu = (nodes - 4) / span
        disc = discretize(geometry, float(ppu))
        fld = reference_field(geometry, disc.grid)
        F = fld.edge_integrals(disc)
        plaq, signs = _plaquettes(disc)
        return cls(disc, F, plaq, signs)

    @classmethod
    def for_field(cls, geometry: Geometry | None, kappa: float, H: float, nodes: int = DEFAULT_NODES) -> "GLGrid":
        """Smallest grid from ``nodes`` upward (by factors of 1.25) resolving the
        coherence and magnetic lengths: ``h <= 1/(4 kappa)`` and ``h <= 1/(4 sqrt(kappa H))``."""
        geometry = geometry or concentric_discs()
        need = min(1.0 / (4.0 * kappa), 1.0 / (4.0 * np.sqrt(kappa * H)))
        n = nodes
        while True:
            grid = cls.build(geometry, n)
            if grid.h <= need:
                return grid
            n = int(np.ceil(n * 1.25))

    def edge_weights(self, m: float) -> np.ndarray:
        return self.disc.edge_weights(m)

    def linear_mu(self, material: Material, kappa: float, H: float) -> float:
        """Lowest eigenvalue of the Hessian operator at the normal state on this grid."""
        B, alpha = kappa * H, kappa / H
        fld = reference_field(self.geometry, self.disc.grid)
        mat = assemble_planar_operator(self.disc, material, B, alpha, fld)
        val, _ = _lowest_hermitian(mat, alpha * B)
        return float(val)


def _plaquettes(disc: Discretization):
    ny, nx = disc.active.shape
    hidx = -np.ones((ny, nx - 1), dtype=np.int64)
    vidx = -np.ones((ny - 1, nx), dtype=np.int64)
    i, j = disc.edge_ij[:, 0], disc.edge_ij[:, 1]
    hm = disc.edge_dir == 0
    ids = np.arange(disc.edges.shape[0])
    hidx[j[hm], i[hm]] = ids[hm]
    vidx[j[~hm], i[~hm]] = ids[~hm]
    # counterclockwise: bottom (+), right (+), top (-), left (-)
    bottom, top = hidx[:-1, :], hidx[1:, :]
    left, right = vidx[:, :-1], vidx[:, 1:]
    ok = (bottom >= 0) & (top >= 0) & (left >= 0) & (right >= 0)
    plaq = np.column_stack([bottom[ok], right[ok], top[ok], left[ok]])
    signs = np.tile(np.array([1.0, 1.0, -1.0, -1.0]), (plaq.shape[0], 1))
    return plaq, signs


@dataclass
class GLState:
    """Order parameter per node and link phase per edge on a GLGrid."""

    grid: GLGrid = field(repr=False)
    psi: np.ndarray = field(repr=False)
    link: np.ndarray = field(repr=False)
    kappa: float
    H: float
    energy: float = float("nan")
    grad_norm: float = float("nan")
    converged: bool = False
    iterations: int = 0
    init: str = ""

    @property
    def psi_l2(self) -> float:
        return float(self.grid.h * np.sqrt(np.sum(np.abs(self.psi) ** 2)))

    def copy(self) -> "GLState":
        return GLState(self.grid, self.psi.copy(), self.link.copy(), self.kappa, self.H, self.energy,
                       self.grad_norm, self.converged, self.iterations, self.init)


def normal_state(grid: GLGrid, kappa: float, H: float) -> GLState:
    """``(psi, A) = (0, F)``."""
    return GLState(grid, np.zeros(grid.n_nodes, complex), kappa * H * grid.F_edges.copy(), float(kappa), float(H))


def gauge_transform(state: GLState, chi: np.ndarray) -> GLState:
    """``psi -> exp(i chi) psi`` with links shifted by the edge differences of chi."""
    e = state.grid.disc.edges
    out = state.copy()
    out.psi = np.exp(1j * chi) * state.psi
    out.link = state.link + chi[e[:, 1]] - chi[e[:, 0]]
    return out


# ---------------------------------------------------------------------------
# energy and gradient


@numba.njit(cache=True)
def _energy_kernel(psi, link, ei, ej, w, V, f, k2h2, plaq, signs, target, h):
    kin = 0.0
    for e in range(ei.size):
        z = np.exp(-1j * link[e]) * psi[ej[e]] - psi[ei[e]]
        kin += w[e] * (z.real * z.real + z.imag * z.imag)
    pot = 0.0
    for v in range(psi.size):
        r2 = psi[v].real ** 2 + psi[v].imag ** 2
        pot += V[v] * r2 + 0.5 * f[v] * r2 * r2
    mag = 0.0
    for q in range(plaq.shape[0]):
        c = -target
        for k in range(4):
            c += signs[q, k] * link[plaq[q, k]]
        mag += c * c
    return kin + k2h2 * pot + mag / (h * h)


@numba.njit(cache=True)
def _gradient_kernel(psi, link, ei, ej, w, V, f, k2h2, plaq, signs, target, h):
    g = np.zeros(psi.size, np.complex128)
    gl = np.zeros(link.size)
    for e in range(ei.size):
        a, b = ei[e], ej[e]
        ph = np.exp(-1j * link[e])
        wD = w[e] * (ph * psi[b] - psi[a])
        g[a] -= wD
        g[b] += np.conj(ph) * wD
        gl[e] = -w[e] * (np.conj(psi[a]) * ph * psi[b]).imag
    for v in range(psi.size):
        r2 = psi[v].real ** 2 + psi[v].imag ** 2
        g[v] += k2h2 * (V[v] + f[v] * r2) * psi[v]
    scale = 1.0 / (h * h)
    for q in range(plaq.shape[0]):
        c = -target
        for k in range(4):
            c += signs[q, k] * link[plaq[q, k]]
        for k in range(4):
            gl[plaq[q, k]] += signs[q, k] * c * scale
    return 2.0 * g, 2.0 * gl


class _Terms:
    """Precomputed coefficient arrays for one (grid, material, kappa, H)."""

    def __init__(self, grid: GLGrid, material: Material, kappa: float, H: float):
        d = grid.disc
        self.grid = grid
        self.i = np.ascontiguousarray(d.edges[:, 0])
        self.j = np.ascontiguousarray(d.edges[:, 1])
        self.w = d.edge_weights(material.m)
        self.f = d.inner_fraction
        self.V = d.node_potential(material.a)
        self.h = d.grid.h
        self.k2h2 = kappa**2 * self.h**2
        self.target = kappa * H * self.h**2
        self.n, self.E = d.n, d.edges.shape[0]
        self._args = (self.i, self.j, self.w, self.V, self.f, self.k2h2,
                      grid.plaquettes, grid.plaquette_signs, self.target, self.h)

    def circulation(self, link):
        p, s = self.grid.plaquettes, self.grid.plaquette_signs
        return np.sum(link[p] * s, axis=1)

    def energy(self, psi, link):
        return float(_energy_kernel(np.asarray(psi, np.complex128), np.asarray(link, float), *self._args))

    def gradient(self, psi, link):
        """Real gradient: complex array for psi (d/dRe + i d/dIm), real array for links."""
        return _gradient_kernel(np.asarray(psi, np.complex128), np.asarray(link, float), *self._args)


def gl_energy(state: GLState, material: Material) -> float:
    """Discrete Gibbs energy of ``state``."""
    return _Terms(state.grid, material, state.kappa, state.H).energy(state.psi, state.link)


def gl_gradient(state: GLState, material: Material) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradient of ``gl_energy``: (complex psi part, real link part).

    The psi part packs the derivatives in Re psi and Im psi as real and
    imaginary parts.
    """
    return _Terms(state.grid, material, state.kappa, state.H).gradient(state.psi, state.link)


def quadratic_form(grid: GLGrid, material: Material, kappa: float, H: float, phi: np.ndarray) -> float:
    """``h^2 <phi, (L/h^2 + kappa^2 V) phi>``: the linearized energy at the normal state."""
    fld = reference_field(grid.geometry, grid.disc.grid)
    mat = assemble_planar_operator(grid.disc, material, kappa * H, kappa / H, fld)
    return float(grid.h**2 * np.real(np.vdot(phi, mat @ phi)))


def second_variation(grid: GLGrid, material: Material, kappa: float, H: float, phi: np.ndarray) -> float:
    """Half the second derivative of ``t -> E(t phi, F)`` at 0, from the gradient.

    The psi-gradient is linear in psi to first order, so
    ``<phi, grad(t phi)> / (2 t)`` at small t is the quadratic form; the
    quartic correction is removed by a two-point extrapolation in t.
    """
    terms = _Terms(grid, material, kappa, H)
    link = kappa * H * grid.F_edges
    vals = []
    for t in (1e-4, 2e-4):
        g, _ = terms.gradient(t * phi, link)
        vals.append(float(np.real(np.vdot(phi, g))) / (2.0 * t))
    # value(t) = Q + c t^2
    return (4.0 * vals[0] - vals[1]) / 3.0


# ---------------------------------------------------------------------------
# minimization


def _project(psi):
    r = np.abs(psi)
    return np.where(r > 1.0, psi / np.maximum(r, 1e-300), psi)


def _initial(grid: GLGrid, kappa: float, H: float, init: str, rng: np.random.Generator, amplitude: float, supplied=None):
    link = kappa * H * grid.F_edges.copy()
    n = grid.n_nodes
    if init == "normal_perturbed":
        psi = amplitude * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    elif init == "meissner":
        # fully superconducting sample in the applied field
        psi = np.where(grid.disc.inner_fraction > 0.5, 1.0, 0.0).astype(complex)
    elif init == "supplied":
        if supplied is None:
            raise ValueError("init='supplied' needs a state")
        return supplied.psi.astype(complex).copy(), supplied.link.astype(float).copy()
    else:
        raise ValueError(f"unknown init {init!r}")
    return _project(psi), link


def minimize(
    kappa: float,
    H: float,
    material: Material,
    grid: GLGrid | None = None,
    init: str = "normal_perturbed",
    seed: int = 0,
    supplied: GLState | None = None,
    tol: float | None = None,
    max_iter: int = 20000,
    amplitude: float = 0.1,
    armijo: float = 1e-4,
    memory: int = 10,
) -> GLState:
    """Barzilai-Borwein gradient descent with nonmonotone Armijo backtracking.

    A step is accepted when it decreases the largest of the last ``memory``
    energies by the Armijo amount; a strictly monotone test stalls once the
    decrease per step falls below the rounding error of the energy sum.

    Link phases are rescaled by 1/h internally so both blocks of the Hessian
    have comparable magnitude.  After each step ``|psi|`` is truncated at 1,
    which never increases the energy.  Stops when the gradient norm is below
    ``tol``; the default is ``1e-8`` times the number of nodes times ``h^2``
    (every gradient entry carries a cell area ``h^2``).  On hitting
    ``max_iter`` the best state is returned with ``converged=False``.
    """
    if not (kappa > 0 and H > 0):
        raise ValueError("kappa and H must be positive")
    grid = grid or GLGrid.for_field(None, kappa, H)
    if grid.h > min(1.0 / (4.0 * kappa), 1.0 / (4.0 * np.sqrt(kappa * H))) * (1 + 1e-12):
        log.warning("grid spacing %.4g does not resolve kappa=%g, H=%g", grid.h, kappa, H)
    tol = 1e-8 * grid.n_nodes * grid.h**2 if tol is None else tol
    terms = _Terms(grid, material, kappa, H)
    rng = np.random.default_rng(seed)
    psi, link = _initial(grid, kappa, H, init, rng, amplitude, supplied)
    h = grid.h
    n = grid.n_nodes

    def pack(p, l):
        return np.concatenate([p.real, p.imag, l / h])

    def unpack(x):
        return x[:n] + 1j * x[n : 2 * n], x[2 * n :] * h

    def grad_x(p, l):
        gp, gl = terms.gradient(p, l)
        return np.concatenate([gp.real, gp.imag, gl * h])

    x = pack(psi, link)
    E = terms.energy(psi, link)
    g = grad_x(psi, link)
    step = 1.0 / max(8.0 * float(np.max(terms.w)), 1.0)
    converged = False
    it = 0
    gnorm = float(np.linalg.norm(g))
    recent = deque([E], maxlen=memory)
    best = (E, x, gnorm)
    for it in range(1, max_iter + 1):
        if gnorm <= tol:
            converged = True
            break
        # nonmonotone Armijo test against the largest of the recent energies
        ref = max(recent)
        t = step
        while True:
            p_new, l_new = unpack(x - t * g)
            p_new = _project(p_new)
            x_new = pack(p_new, l_new)
            E_new = terms.energy(p_new, l_new)
            if E_new <= ref - armijo * np.dot(g, x - x_new) or t < 1e-16:
                break
            t *= 0.5
        if E_new > ref:
            break  # no acceptable step at machine precision
        g_new = grad_x(p_new, l_new)
        s, y = x_new - x, g_new - g
        sy = float(np.dot(s, y))
        # alternate the two Barzilai-Borwein step lengths
        if sy > 0:
            step = float(np.dot(s, s)) / sy if it % 2 else sy / float(np.dot(y, y))
        else:
            step = min(2.0 * t, 1e6)
        x, g, E = x_new, g_new, E_new
        gnorm = float(np.linalg.norm(g))
        recent.append(E)
        if E < best[0]:
            best = (E, x, gnorm)
    else:
        converged = gnorm <= tol
    if not converged:
        E, x, gnorm = best
        log.warning("GL minimization at kappa=%g, H=%g stopped at |grad|=%.3e after %d iterations", kappa, H, gnorm, it)
    psi, link = unpack(x)
    return GLState(grid, psi, link, float(kappa), float(H), float(E), gnorm, converged, it, init)


def is_nontrivial(state: GLState, energy_tol: float = ENERGY_TOL, psi_tol: float = PSI_TOL) -> bool:
    return bool(state.psi_l2 > psi_tol and state.energy < -energy_tol)


# ---------------------------------------------------------------------------
# diagnostics


def critical_point_diagnostics(state: GLState, material: Material, fit_width: float = 1.0) -> dict:
    """Bounds satisfied by critical points, evaluated on ``state``.

    The decay fit regresses the shell average of ``log |psi|^2`` on the
    distance t into the superconductor over ``[t_peak, t_peak + fit_width /
    sqrt(kappa H)]``; ``decay_ratio = -slope / (2 sqrt(kappa H))`` estimates
    the exponent epsilon of the weighted bound ``int exp(2 eps sqrt(kappa H) t) |psi|^2``.
    """
    grid, kappa, H = state.grid, state.kappa, state.H
    d = grid.disc
    h2 = grid.h**2
    f = d.inner_fraction
    r2 = np.abs(state.psi) ** 2
    in2, out2 = float(np.sum(f * r2)), float(np.sum((1 - f) * r2))
    in4, out4 = float(np.sum(f * r2**2)), float(np.sum((1 - f) * r2**2))
    a, m = material.a, material.m
    terms = _Terms(grid, material, kappa, H)
    D = np.exp(-1j * state.link) * state.psi[terms.j] - state.psi[terms.i]
    nabla = float(np.sqrt(np.sum(np.abs(D) ** 2)))
    l2_in = float(np.sqrt(h2 * in2))
    l4_in_sq = float(np.sqrt(h2 * in4))
    l4_all = float((h2 * np.sum(r2**2)) ** 0.25)
    curl = terms.circulation(state.link) / (kappa * H * h2)
    curl_err = float(np.sqrt(h2 * np.sum((curl - 1.0) ** 2)))
    denom = l2_in * l4_all
    report = {
        "kappa": kappa,
        "H": H,
        "energy": state.energy,
        "grad_norm": state.grad_norm,
        "advisory": not state.converged,
        "max_abs_psi": float(np.sqrt(r2.max())) if r2.size else 0.0,
        "psi_l2": state.psi_l2,
        "l2_partition_ratio": a * out2 / in2 if in2 > 0 else float("nan"),
        "l4_partition_ratio": a * out4 / in4 if in4 > 0 else float("nan"),
        "curl_ratio": H * curl_err / denom if denom > 0 else float("nan"),
        "nabla_norm": nabla,
        "nabla_bound": max(1.0, np.sqrt(m)) * kappa * l2_in,
        "l4_sq_omega": l4_in_sq,
        "l2_omega": l2_in,
    }
    B = kappa * H
    t = _distance_to_inner_boundary(grid.geometry, d.nodes_x, d.nodes_y)
    inside = f >= 1.0
    ratio, slope = float("nan"), float("nan")
    if in2 > 0 and np.any(inside):
        bins = np.arange(0.0, t[inside].max() + grid.h, grid.h)
        k = np.digitize(t[inside], bins)
        cnt = np.bincount(k, minlength=bins.size + 1)
        acc = np.bincount(k, r2[inside], minlength=bins.size + 1)
        ok = cnt > 0
        centers = np.concatenate([[0.0], bins])[ok] + 0.5 * grid.h
        prof = acc[ok] / cnt[ok]
        good = prof > 1e-300
        centers, prof = centers[good], np.log(prof[good])
        if centers.size >= 3:
            t_peak = centers[int(np.argmax(prof))]
            sel = (centers >= t_peak) & (centers <= t_peak + fit_width / np.sqrt(B))
            if np.count_nonzero(sel) >= 3:
                slope = float(np.polyfit(centers[sel], prof[sel], 1)[0])
                ratio = -slope / (2.0 * np.sqrt(B))
    report["decay_slope"] = slope
    report["decay_ratio"] = ratio
    # boundary-layer mass within (kappa (H - kappa))^(-1/2) of the interface
    if H > kappa and r2.sum() > 0:
        width = 1.0 / np.sqrt(kappa * (H - kappa))
        report["layer_mass_fraction"] = float(np.sum(r2[t <= width]) / np.sum(r2))
    else:
        report["layer_mass_fraction"] = float("nan")
    return report
