"""Critical fields from the linearized problem.

With ``B = kappa H`` and ``alpha = kappa / H`` the linearization of the
Ginzburg-Landau functional at the normal state has ground energy
``mu(kappa, H) = mu_1(B, alpha)``; superconductivity nucleates where it is
negative.  This module evaluates that map, the one-sided B-derivatives of
``lambda_1 = mu_1 + alpha B``, the root ``H_*(kappa)`` and its asymptotic
prediction, and the empirical comparison of the local and global sets of
fields with nontrivial minimizers.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .constants import model_constants
from .model1d import Material
from .planar import (
    Geometry,
    PlanarEig,
    RadialGrid,
    _band_xi,
    _mode_window,
    default_points_per_unit,
    disc_mode_energy,
    mu1_2d_fd,
    mu1_disc_fourier,
    radial_grid,
)
from .tridiag import ConvergenceError

__all__ = [
    "FieldPoint",
    "TransitionReport",
    "mu_linear",
    "lambda1",
    "db_lambda1_pm",
    "OneSided",
    "disc_mode_crossings",
    "hc3_star",
    "hc3_asymptotic",
    "condition_m_check",
    "classify_sets",
]

log = logging.getLogger(__name__)

ROOT_RTOL = 1e-6
CEILING_FACTOR = 10.0  # H_max = 10 kappa, the large-field normal regime
TIE_TOL = 1e-8  # mode energies closer than this are treated as crossing


@dataclass(frozen=True)
class FieldPoint:
    kappa: float
    H: float
    B: float
    alpha: float
    mu: float
    eig: PlanarEig | None = field(default=None, repr=False, compare=False)

    def record(self) -> dict:
        return {"kappa": self.kappa, "H": self.H, "B": self.B, "alpha": self.alpha, "mu": self.mu}


@dataclass
class TransitionReport:
    kappa: float
    H_star: float = float("nan")
    H_asym: float = float("nan")
    N_loc_sup: float = float("nan")
    N_loc_inf_complement: float = float("nan")
    monotone_after: float | None = None
    kinks: list = field(default_factory=list)
    N_sup: float = float("nan")
    N_inf_complement: float = float("nan")
    positive_above: bool | None = None
    scan: list = field(default_factory=list)
    unknown: list = field(default_factory=list)
    boundary_agreement_steps: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def _use_fourier(geometry: Geometry, method: str = "auto") -> bool:
    if method not in ("auto", "fourier", "fd"):
        raise ValueError(f"unknown method {method!r}")
    if method == "fourier" and geometry.kind != "concentric_discs":
        raise ValueError("the Fourier path needs concentric discs")
    return method == "fourier" or (method == "auto" and geometry.kind == "concentric_discs")


def mu_linear(kappa: float, H: float, geometry: Geometry, material: Material, method: str = "auto", **solver) -> FieldPoint:
    """``mu^(1)(kappa, H) = mu_1(kappa H, kappa / H)``.

    With ``method="auto"`` concentric discs use the angular Fourier path and
    other geometries the finite-difference path.  Keyword arguments go to the
    solver.
    """
    if not (kappa > 0 and H > 0):
        raise ValueError("kappa and H must be positive")
    B, alpha = kappa * H, kappa / H
    if _use_fourier(geometry, method):
        eig = mu1_disc_fourier(geometry, material, B, alpha, **solver)
    else:
        eig = mu1_2d_fd(geometry, material, B, alpha, **solver)
    return FieldPoint(float(kappa), float(H), float(B), float(alpha), eig.mu1, eig)


def lambda1(B: float, alpha: float, geometry: Geometry, material: Material, method: str = "auto", **solver) -> float:
    """``lambda_1(B, alpha) = mu_1(B, alpha) + alpha B``."""
    if _use_fourier(geometry, method):
        eig = mu1_disc_fourier(geometry, material, B, alpha, **solver)
    else:
        eig = mu1_2d_fd(geometry, material, B, alpha, **solver)
    return eig.mu1 + alpha * B


# ---------------------------------------------------------------------------
# one-sided B-derivatives


@dataclass(frozen=True)
class OneSided:
    B: float
    left: float
    right: float
    converged: bool = True
    modes: tuple = ()  # active angular modes (disc path)
    method: str = ""

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.B, self.left, self.right)


class _DiscModes:
    """Mode energies of ``lambda_1`` on a frozen radial grid pair (h, h/2).

    Freezing the grid makes every branch an exactly differentiable function of
    B; energies and Feynman-Hellmann derivatives are Richardson-combined.
    """

    def __init__(self, geometry, material, alpha, B_ref, h_scaled=0.02, rho_min="auto", extrapolate=True):
        self.geometry, self.material, self.alpha = geometry, material, float(alpha)
        self.r = geometry.inner[0]
        self.grid = radial_grid(geometry, B_ref * self.r**2, h_scaled, rho_min)
        self.fine = RadialGrid(self.grid.rho_min, self.grid.rho_max, self.grid.h / 2.0)
        self.extrapolate = extrapolate
        self.xi = _band_xi(material.a, material.m, self.alpha)

    def mode(self, n: int, B: float) -> tuple[float, float]:
        """(lambda-branch value, its B-derivative) of angular mode n."""
        Bs, r2 = B * self.r**2, self.r**2
        e = disc_mode_energy(n, Bs, self.alpha, self.material, self.grid)
        val, der = e.value, e.dB
        if self.extrapolate:
            f = disc_mode_energy(n, Bs, self.alpha, self.material, self.fine)
            val = (4.0 * f.value - e.value) / 3.0
            der = (4.0 * f.dB - e.dB) / 3.0
        # mu scales as 1/r^2 and B as 1/r^2, so d mu / d B is scale-free
        return val / r2 + self.alpha * B, der + self.alpha

    def window(self, B: float, D: float = 4.0) -> range:
        lo, hi = _mode_window(B * self.r**2, self.xi, D)
        return range(max(lo, 0), hi + 1)

    def active(self, B: float, D: float = 4.0):
        vals = {n: self.mode(n, B) for n in self.window(B, D)}
        best = min(v[0] for v in vals.values())
        act = {n: v for n, v in vals.items() if v[0] - best <= TIE_TOL * max(1.0, abs(best))}
        ns = sorted(vals)
        n_star = min(vals, key=lambda n: vals[n][0])
        if n_star in (ns[0], ns[-1]) and ns[0] != 0:
            return self.active(B, 2 * D)
        return best, act


def _db_disc(B, alpha, geometry, material, **opts) -> OneSided:
    modes = _DiscModes(geometry, material, alpha, B, **opts)
    _, act = modes.active(B)
    ders = [v[1] for v in act.values()]
    # right derivative of a minimum of smooth branches: the smallest slope
    # among the active ones; left: the largest
    return OneSided(float(B), max(ders), min(ders), True, tuple(sorted(act)), "fourier-fh")


def _db_quotients(B, alpha, geometry, material, dB0=None, rtol=1e-3, max_halvings=6, **solver) -> OneSided:
    ppu = solver.pop("points_per_unit", None) or default_points_per_unit(B, geometry)
    base = mu1_2d_fd(geometry, material, B, alpha, points_per_unit=ppu, return_vector=True, **solver)
    lam0 = base.mu1 + alpha * B

    def lam(b):
        e = mu1_2d_fd(geometry, material, b, alpha, points_per_unit=ppu, estimate=base.mu1, v0=base.vector, **solver)
        return e.mu1 + alpha * b

    step = dB0 if dB0 is not None else max(0.01, 1e-4 * B)
    out, ok = {}, True
    for side, sgn in (("left", -1.0), ("right", 1.0)):
        h = step
        prev = sgn * (lam(B + sgn * h) - lam0) / h
        for _ in range(max_halvings):
            h /= 2.0
            cur = sgn * (lam(B + sgn * h) - lam0) / h
            if abs(cur - prev) <= rtol * max(abs(cur), 1e-12):
                prev = cur
                break
            prev = cur
        else:
            ok = False
            log.warning("difference quotient (%s) at B=%g did not settle", side, B)
        out[side] = prev
    return OneSided(float(B), out["left"], out["right"], ok, (), "fd-quotient")


def db_lambda1_pm(B: float, alpha: float, geometry: Geometry, material: Material, method: str = "auto", **opts) -> OneSided:
    """One-sided derivatives of ``lambda_1`` in B at fixed alpha.

    Discs: per-mode Feynman-Hellmann derivatives on a frozen radial grid;
    at a mode crossing the active set gives distinct left/right values.
    Other geometries: one-sided difference quotients on a fixed FD grid,
    step ``max(0.01, 1e-4 B)`` halved until successive values agree to 1e-3.
    A quotient that does not settle is flagged, not raised.
    """
    if not (B > 0 and alpha > 0):
        raise ValueError("need B > 0 and alpha > 0")
    if _use_fourier(geometry, method):
        return _db_disc(B, alpha, geometry, material, **opts)
    return _db_quotients(B, alpha, geometry, material, **opts)


def disc_mode_crossings(
    B_lo: float,
    B_hi: float,
    alpha: float,
    geometry: Geometry,
    material: Material,
    step: float = 0.5,
    **opts,
) -> list[OneSided]:
    """Locate the changes of the winning angular mode in ``[B_lo, B_hi]``.

    The winner is sampled every ``step``; each change is refined by Brent's
    method on the difference of the two branch energies, and the one-sided
    derivatives are read off the two branches there.
    """
    modes = _DiscModes(geometry, material, alpha, 0.5 * (B_lo + B_hi), **opts)
    Bs = np.arange(B_lo, B_hi + 0.5 * step, step)
    winners = []
    for b in Bs:
        _, act = modes.active(b)
        winners.append(min(act, key=lambda n: act[n][0]))
    out = []
    for k in range(len(Bs) - 1):
        n1, n2 = winners[k], winners[k + 1]
        if n1 == n2:
            continue
        if abs(n2 - n1) != 1:
            log.warning("winning mode jumps %d -> %d between B=%g and %g; refine the step", n1, n2, Bs[k], Bs[k + 1])

        def diff(b):
            return modes.mode(n1, b)[0] - modes.mode(n2, b)[0]

        bc = brentq(diff, Bs[k], Bs[k + 1], xtol=1e-12, rtol=1e-14)
        d1, d2 = modes.mode(n1, bc)[1], modes.mode(n2, bc)[1]
        # n1 wins to the left, n2 to the right
        out.append(OneSided(float(bc), d1, d2, True, (n1, n2), "fourier-fh"))
    return out


# ---------------------------------------------------------------------------
# the critical field H_*(kappa)


def hc3_asymptotic(kappa: float, geometry: Geometry, material: Material, constants=None) -> float:
    """``kappa / alpha_0 + calC1 * alpha_0^(-3/2) * curvature_max``."""
    c = constants or model_constants(material)
    return kappa / c.alpha0 + c.calC1 * c.alpha0 ** (-1.5) * geometry.curvature_max


def hc3_star(
    kappa: float,
    geometry: Geometry,
    material: Material,
    n_check: int = 10,
    n_ceiling: int = 12,
    constants=None,
    **solver,
) -> TransitionReport:
    """Smallest root ``H_*`` of ``H -> mu^(1)(kappa, H)`` and a uniqueness scan.

    The bracket is found by stepping H up by 5% from ``kappa / 2``; the root
    is bisected to 1e-6 relative.  Above it, ``n_check`` points in
    ``(H_*, 3 kappa]`` and ``n_ceiling`` points up to ``10 kappa`` are
    sampled; ``positive_above`` records whether mu stayed positive.
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")

    def mu(H):
        return mu_linear(kappa, H, geometry, material, **solver).mu

    scan = []
    H_prev, m_prev = 0.5 * kappa, mu(0.5 * kappa)
    scan.append((H_prev, m_prev))
    H_max = CEILING_FACTOR * kappa
    while True:
        H = H_prev * 1.05
        if H > H_max:
            dump = ", ".join(f"({h:.4g}, {v:.4g})" for h, v in scan)
            raise ConvergenceError(f"no sign change of mu(kappa={kappa}, H) below H = {H_max:g}: {dump}")
        m = mu(H)
        scan.append((H, m))
        if m_prev < 0.0 <= m:
            break
        H_prev, m_prev = H, m
    lo, hi = H_prev, H
    while hi - lo > ROOT_RTOL * hi:
        mid = 0.5 * (lo + hi)
        if mu(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    H_star = 0.5 * (lo + hi)

    check = np.linspace(H_star, 3.0 * kappa, n_check + 1)[1:]
    ceiling = np.geomspace(3.0 * kappa, H_max, n_ceiling + 1)[1:]
    above = [(float(h), mu(h)) for h in np.concatenate([check, ceiling])]
    scan.extend(above)
    positive = all(v > 0.0 for _, v in above)
    vals = np.array([v for _, v in above])
    # smallest sampled H from which the samples are non-decreasing
    monotone_after = None
    for k in range(len(above)):
        if np.all(np.diff(vals[k:]) >= 0.0):
            monotone_after = above[k][0]
            break
    c = constants or model_constants(material)
    return TransitionReport(
        kappa=float(kappa),
        H_star=float(H_star),
        H_asym=hc3_asymptotic(kappa, geometry, material, c),
        monotone_after=monotone_after,
        positive_above=positive,
        scan=[(float(h), float(v)) for h, v in sorted(scan)],
    )


# ---------------------------------------------------------------------------
# the monotonicity hypothesis


def condition_m_check(material: Material, constants=None, rtol: float = 1e-6) -> dict:
    """Evaluate ``(1/a)(a alpha0 + C2/2)(1 - Theta0/alpha0) < alpha0 - C2/2`` at alpha0.

    ``holds`` is None when the sides agree to ``rtol`` (indeterminate).
    """
    c = constants or model_constants(material)
    a = material.a
    lhs = (a * c.alpha0 + 0.5 * c.C2) * (1.0 - c.theta0 / c.alpha0) / a
    rhs = c.alpha0 - 0.5 * c.C2
    scale = max(abs(lhs), abs(rhs), 1e-300)
    holds = None if abs(lhs - rhs) <= rtol * scale else bool(lhs < rhs)
    return {"a": a, "m": material.m, "lhs": float(lhs), "rhs": float(rhs), "holds": holds}


# ---------------------------------------------------------------------------
# local versus global transition sets


def _set_edges(H, member):
    """sup of the member set and inf of the complement (nan when empty)."""
    H = np.asarray(H, float)
    mem = np.asarray(member, dtype=object)
    yes = [h for h, v in zip(H, mem) if v is True]
    no = [h for h, v in zip(H, mem) if v is False]
    return (max(yes) if yes else float("nan")), (min(no) if no else float("nan"))


def classify_sets(
    kappa: float,
    geometry: Geometry,
    material: Material,
    H_grid,
    gl_grid=None,
    energy_tol: float = 1e-8,
    psi_tol: float = 1e-4,
    seed: int = 0,
    inits=("normal_perturbed",),
    **gl_opts,
) -> TransitionReport:
    """Empirical N^loc (mu < 0) and N (nontrivial GL minimizer) over ``H_grid``.

    The linear criterion uses the finite-difference operator on the same
    grid as the GL minimization, so the two sets are compared without a
    discretization offset.  A minimization that does not converge marks its
    point unknown.
    """
    from .glflow import GLGrid, is_nontrivial, minimize

    H_grid = np.asarray(sorted(H_grid), float)
    grid = gl_grid or GLGrid.for_field(geometry, kappa, float(H_grid.max()))
    scan, unknown, loc, glob = [], [], [], []
    for H in H_grid:
        eig = grid.linear_mu(material, kappa, H)
        in_loc = eig < 0.0
        best = None
        for init in inits:
            st = minimize(kappa, H, material, grid, init=init, seed=seed, **gl_opts)
            if best is None or st.energy < best.energy:
                best = st
        if not best.converged:
            member = None
            unknown.append(float(H))
        else:
            member = is_nontrivial(best, energy_tol, psi_tol)
        loc.append(bool(in_loc))
        glob.append(member)
        scan.append({"H": float(H), "mu": float(eig), "energy": best.energy, "psi_l2": best.psi_l2,
                     "converged": best.converged, "N_loc": bool(in_loc), "N": member})
    loc_sup, loc_inf = _set_edges(H_grid, loc)
    n_sup, n_inf = _set_edges(H_grid, glob)
    steps = None
    if H_grid.size > 1 and np.isfinite(loc_sup) and np.isfinite(n_sup):
        steps = float(abs(loc_sup - n_sup) / np.min(np.diff(H_grid)))
    return TransitionReport(
        kappa=float(kappa),
        N_loc_sup=loc_sup,
        N_loc_inf_complement=loc_inf,
        N_sup=n_sup,
        N_inf_complement=n_inf,
        scan=scan,
        unknown=unknown,
        boundary_agreement_steps=steps,
    )

