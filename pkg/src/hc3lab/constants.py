"""Spectral constants at the band minimizer and the perturbative disc coefficients.

Everything here is evaluated on one grid at a time.  ``model_constants``
optionally combines the values from ``h`` and ``h/2`` by Richardson
extrapolation, which removes the leading ``O(h^2)`` error.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .band import DEFAULT_SCAN, BandProfile, ScanRange, alpha0, band_profile
from .model1d import (
    DEFAULT_GRID,
    Grid1D,
    Material,
    ModelParams,
    assemble_model_operator,
    face_weights,
    ground_state,
    node_potential,
    node_weights,
    theta0,
)
from .tridiag import ConvergenceError, bisect_eigenvalue

__all__ = [
    "GroundState",
    "ModelConstants",
    "PropertyCheck",
    "ground_state_at_minimum",
    "coeff_C1",
    "coeff_b1",
    "regularized_resolvent_apply",
    "coeff_C2",
    "perturbation_lambda",
    "fit_lambda2",
    "property_P_check",
    "model_constants",
]

# relative spectral gap below which the regularized resolvent is refused
MIN_GAP = 1e-3
ORTHOGONALITY_TOL = 1e-6
DELTA_FIT = (-2.0, -1.0, 0.0, 1.0, 2.0)


@dataclass(frozen=True)
class GroundState:
    """Band minimizer and its ground state on one grid."""

    material: Material
    alpha: float
    grid: Grid1D
    profile: BandProfile
    xi: float
    beta: float
    f: np.ndarray = field(repr=False)
    gap: float

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(self.grid.h * np.dot(u, v))

    @property
    def w(self) -> np.ndarray:
        return node_weights(self.grid, self.material.m)

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes


def ground_state_at_minimum(
    material: Material,
    alpha: float,
    resolution: Grid1D = DEFAULT_GRID,
    scan: ScanRange = DEFAULT_SCAN,
    profile: BandProfile | None = None,
) -> GroundState:
    """Ground state f at xi = xi(a, m, alpha), normalized with f >= 0."""
    if profile is None:
        profile = band_profile(material, alpha, scan, resolution)
    if profile.edge_minimum:
        raise ConvergenceError(
            f"band minimum is not attained inside the scan (xi = {profile.xi_star}); "
            "constants at the minimizer are undefined"
        )
    params = ModelParams(material, alpha, profile.xi_star)
    pair = ground_state(params, resolution)
    mat = assemble_model_operator(params, resolution)
    mu2 = bisect_eigenvalue(mat, 1)
    return GroundState(
        material=material,
        alpha=float(alpha),
        grid=resolution,
        profile=profile,
        xi=profile.xi_star,
        beta=pair.value,
        f=pair.vector,
        gap=mu2 - pair.value,
    )


def coeff_C1(gs: GroundState) -> float:
    """C_1: weighted cubic moment of f^2 minus the interface term.

    ``int_+ (t-xi)^3 f^2 + (1/m) int_- (t-xi)^3 f^2 - (1/2)(1 - 1/m) f(0)^2``.
    """
    m = gs.material.m
    f0 = gs.f[gs.grid.zero_index]
    cubic = gs.inner(gs.w * (gs.t - gs.xi) ** 3, gs.f**2)
    return cubic - 0.5 * (1.0 - 1.0 / m) * f0**2


def coeff_b1(gs: GroundState) -> float:
    """b_1 = int_+ f^2 - a int_- f^2, minus the alpha-derivative of the band minimum."""
    return -gs.inner(node_potential(gs.grid, gs.material.a), gs.f**2)


class _Resolvent:
    """Regularized resolvent of (H - beta) on the orthogonal complement of f.

    The singular system is bordered by the ground state,
    ``[[H - beta, e], [e^T, 0]]`` with ``e`` the Euclidean-normalized f, which
    is nonsingular for a simple eigenvalue and returns the solution orthogonal
    to ``e``.
    """

    def __init__(self, gs: GroundState):
        if not gs.gap > MIN_GAP * max(1.0, abs(gs.beta)):
            raise ConvergenceError(
                f"spectral gap {gs.gap:.3e} above beta = {gs.beta:.6f} is too small "
                "for a well-conditioned regularized resolvent"
            )
        self.gs = gs
        mat = assemble_model_operator(ModelParams(gs.material, gs.alpha, gs.xi), gs.grid)
        n = mat.n
        e = gs.f[1:-1] * np.sqrt(gs.grid.h)
        self.e = e
        h_minus = sp.diags([mat.off, mat.diag - gs.beta, mat.off], [-1, 0, 1], shape=(n, n))
        bordered = sp.bmat([[h_minus, e[:, None]], [e[None, :], None]], format="csc")
        self.lu = splu(bordered)
        self.n = n

    def __call__(self, phi: np.ndarray) -> np.ndarray:
        gs = self.gs
        phi = np.asarray(phi, dtype=float)
        proj = phi - gs.inner(phi, gs.f) * gs.f
        rhs = np.zeros(self.n + 1)
        rhs[:-1] = proj[1:-1]
        sol = self.lu.solve(rhs)
        v = np.zeros_like(gs.f)
        v[1:-1] = sol[:-1]
        # one re-orthogonalization pass removes the O(eps * cond) leak along f
        v -= gs.inner(v, gs.f) * gs.f
        return v


def regularized_resolvent_apply(gs: GroundState, phi: np.ndarray) -> np.ndarray:
    """Apply R_0 to a grid function given on all nodes of the ground state's grid."""
    return _Resolvent(gs)(phi)


def coeff_C2(gs: GroundState, resolvent=None) -> tuple[float, float]:
    """Return (I_2, C_2) with I_2 = <g, R_0 g>, g = w (t - xi) f, C_2 = int w f^2 - 4 I_2."""
    g = gs.w * (gs.t - gs.xi) * gs.f
    first_order = gs.inner(g, gs.f)
    if abs(first_order) > ORTHOGONALITY_TOL:
        raise ConvergenceError(
            f"<w (t - xi) f, f> = {first_order:.3e}: xi is not a converged band minimizer"
        )
    r0 = resolvent or _Resolvent(gs)
    i2 = gs.inner(g, r0(g))
    c2 = gs.inner(gs.w, gs.f**2) - 4.0 * i2
    return i2, c2


def _flux_derivative(gs: GroundState, u: np.ndarray) -> np.ndarray:
    """Centered approximation of w u' built from the two face fluxes."""
    h = gs.grid.h
    wf = face_weights(gs.grid, gs.material.m)
    flux = wf * np.diff(u) / h
    out = np.zeros_like(u)
    out[1:-1] = 0.5 * (flux[:-1] + flux[1:])
    return out


def _h1(gs, u, delta):
    t, xi, w = gs.t, gs.xi, gs.w
    s = delta - 0.5 * t**2
    return _flux_derivative(gs, u) + w * (2.0 * (t - xi) * s + 2.0 * t * (t - xi) ** 2) * u


def _h2(gs, u, delta):
    t, xi, w = gs.t, gs.xi, gs.w
    s = delta - 0.5 * t**2
    pot = s**2 + 4.0 * t * (t - xi) * s + 3.0 * t**2 * (t - xi) ** 2
    return t * _flux_derivative(gs, u) + w * pot * u


def perturbation_lambda(gs: GroundState, delta: float, resolvent=None) -> tuple[float, float]:
    """First two coefficients of the eigenvalue expansion in powers of B^(-1/2)."""
    r0 = resolvent or _Resolvent(gs)
    u0 = gs.f
    lam1 = gs.inner(u0, _h1(gs, u0, delta))
    rhs = _h1(gs, u0, delta) - lam1 * u0
    u1 = -r0(rhs)
    lam2 = gs.inner(u0, _h2(gs, u0, delta)) + gs.inner(u0, _h1(gs, u1, delta) - lam1 * u1)
    return lam1, lam2


def fit_lambda2(gs: GroundState, deltas=DELTA_FIT, resolvent=None) -> dict:
    """Least-squares quadratic fit of lambda_2(delta); returns coefficients and vertex form."""
    r0 = resolvent or _Resolvent(gs)
    vals = np.array([perturbation_lambda(gs, d, r0) for d in deltas])
    quad, lin, const = np.polyfit(np.asarray(deltas, float), vals[:, 1], 2)
    delta0 = -lin / (2.0 * quad)
    lam2_vertex = const - lin**2 / (4.0 * quad)
    return {
        "deltas": list(map(float, deltas)),
        "lambda1": [float(v) for v in vals[:, 0]],
        "lambda2": [float(v) for v in vals[:, 1]],
        "quadratic": float(quad),
        "linear": float(lin),
        "constant": float(const),
        "delta0": float(delta0),
        "C0": float(lam2_vertex / quad),
    }


@dataclass(frozen=True)
class PropertyCheck:
    unique: bool
    xi_positive: bool
    nondegenerate: bool
    C1_negative: bool
    b1_positive: bool

    @property
    def holds(self) -> bool:
        return all(asdict(self).values())


@dataclass(frozen=True)
class ModelConstants:
    material: Material
    alpha: float
    theta0: float
    alpha0: float
    beta: float
    xi_star: float
    mu_second: float
    C1: float
    b1: float
    calC1: float
    I2: float
    C2: float
    delta0: float
    C0: float
    d0: float
    P_holds: bool
    P_flags: PropertyCheck
    h: float
    extrapolated: bool
    lambda1: float = float("nan")
    lambda2_quadratic: float = float("nan")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["material"] = {"a": self.material.a, "m": self.material.m}
        return d


_NUMERIC = ("alpha", "theta0", "alpha0", "beta", "xi_star", "mu_second", "C1", "b1", "I2", "C2",
            "delta0", "C0", "lambda1", "lambda2_quadratic")


def _property_flags(profile: BandProfile, c1: float, b1: float) -> PropertyCheck:
    return PropertyCheck(
        unique=bool(profile.minimizer_unique),
        xi_positive=bool(profile.xi_star > 0.0),
        nondegenerate=bool(profile.mu_second_deriv > 0.0),
        C1_negative=bool(c1 < 0.0),
        b1_positive=bool(b1 > 0.0),
    )


def _constants_on_grid(material, alpha, a0, th0, grid, scan):
    gs = ground_state_at_minimum(material, alpha, grid, scan)
    r0 = _Resolvent(gs)
    c1 = coeff_C1(gs)
    b1 = coeff_b1(gs)
    i2, c2 = coeff_C2(gs, r0)
    fit = fit_lambda2(gs, resolvent=r0)
    flags = _property_flags(gs.profile, c1, b1)
    return ModelConstants(
        material=material,
        alpha=float(alpha),
        theta0=th0,
        alpha0=a0,
        beta=gs.beta,
        xi_star=gs.xi,
        mu_second=gs.profile.mu_second_deriv,
        C1=c1,
        b1=b1,
        calC1=-c1 / b1 if b1 != 0 else float("nan"),
        I2=i2,
        C2=c2,
        delta0=fit["delta0"],
        C0=fit["C0"],
        d0=th0 - 0.5,
        P_holds=flags.holds,
        P_flags=flags,
        h=grid.h,
        extrapolated=False,
        lambda1=float(np.mean(fit["lambda1"])),
        lambda2_quadratic=fit["quadratic"],
    )


def model_constants(
    material: Material,
    alpha: float | None = None,
    resolution: Grid1D = DEFAULT_GRID,
    extrapolate: bool = True,
    scan: ScanRange = DEFAULT_SCAN,
) -> ModelConstants:
    """The constant bundle at (a, m, alpha); ``alpha=None`` means alpha = alpha_0(a, m).

    With ``extrapolate`` every numeric field is the Richardson combination of
    the values on ``h`` and ``h/2``; at ``alpha=None`` each grid uses its own
    alpha_0 so the bundle sits exactly at the threshold on both.  The boolean
    flags come from the finer grid.
    """
    grids = [resolution, resolution.refined()] if extrapolate else [resolution]
    runs = []
    for g in grids:
        a0 = alpha0(material, g)
        al = a0 if alpha is None else float(alpha)
        runs.append(_constants_on_grid(material, al, a0, theta0(g), g, scan))
    if not extrapolate:
        return runs[0]
    coarse, fine = runs
    combined = {k: (4.0 * getattr(fine, k) - getattr(coarse, k)) / 3.0 for k in _NUMERIC}
    if alpha is not None:
        combined["alpha"] = float(alpha)
    c1, b1 = combined["C1"], combined["b1"]
    combined["calC1"] = -c1 / b1 if b1 != 0 else float("nan")
    combined["d0"] = combined["theta0"] - 0.5
    flags = replace(fine.P_flags, C1_negative=c1 < 0.0, b1_positive=b1 > 0.0)
    return replace(fine, **combined, P_flags=flags, P_holds=flags.holds, extrapolated=True)


def property_P_check(
    material: Material,
    alpha: float | None = None,
    resolution: Grid1D = DEFAULT_GRID,
    n_points: int = 5,
) -> dict:
    """Property P at alpha (default alpha_0) and an empirical epsilon* around alpha_0.

    The alpha grid is ``alpha_0 + (d0 / 2) * linspace(-1, 1, n_points)``; the
    reported epsilon* is the largest symmetric offset on that grid for which
    P holds at every point out to it, or 0 if it fails at alpha_0 itself.
    """
    a0 = alpha0(material, resolution)
    d0 = theta0(resolution) - 0.5
    at = model_constants(material, alpha, resolution, extrapolate=False)
    offsets = 0.5 * d0 * np.linspace(-1.0, 1.0, n_points)
    results = []
    for off in offsets:
        al = a0 + off
        try:
            c = model_constants(material, al, resolution, extrapolate=False)
            ok = c.P_holds
        except ConvergenceError:
            ok = False
        results.append((float(al), bool(ok)))
    ok_by_offset = {round(abs(o), 12): True for o in offsets}
    for o, (_, ok) in zip(offsets, results):
        ok_by_offset[round(abs(o), 12)] &= ok
    eps = 0.0
    for o in sorted(ok_by_offset):
        if not ok_by_offset[o]:
            break
        eps = o
    return {
        "holds": at.P_holds,
        "flags": asdict(at.P_flags),
        "alpha": at.alpha,
        "alpha_grid": results,
        "epsilon_star": float(eps) if ok_by_offset.get(0.0, False) else 0.0,
    }
