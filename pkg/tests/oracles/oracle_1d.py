"""Independent oracles for the 1D model problems; regenerates tests/golden.json.

Two oracles, neither sharing code with the package:
  * parabolic cylinder matching (scipy.special.pbdv), grid free, for mu_1,
    beta, alpha_0 and Theta_0;
  * a separately assembled discretization solved with LAPACK
    (scipy.linalg.eigh_tridiagonal and dense solves) on [-8, 8] at
    h in {0.02, 0.01, 0.005}, extrapolated to h -> 0 with a two-level
    Richardson table, for the constants that need eigenfunctions.

Run: python3 tests/oracles/oracle_1d.py
"""

import json
from pathlib import Path

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve
from scipy.optimize import brentq, minimize_scalar
from scipy.special import pbdv

SQ2 = np.sqrt(2.0)


# --- parabolic cylinder oracle -------------------------------------------------

def pcf_mismatch(mu, a, m, alpha, xi):
    nu_r = (mu + alpha - 1.0) / 2.0
    nu_l = (m * (mu - a * alpha) - 1.0) / 2.0
    dr, dpr = pbdv(nu_r, -SQ2 * xi)
    dl, dpl = pbdv(nu_l, SQ2 * xi)
    return SQ2 * dpr * dl + (1.0 / m) * SQ2 * dpl * dr


def pcf_mu1(a, m, alpha, xi):
    xs = np.linspace(-alpha + 1e-9, 1.5, 3000)
    f = np.array([pcf_mismatch(x, a, m, alpha, xi) for x in xs])
    i = np.nonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0][0]
    return brentq(pcf_mismatch, xs[i], xs[i + 1], args=(a, m, alpha, xi), xtol=1e-15)


def pcf_beta(a, m, alpha, bounds=(0.0, 3.0)):
    r = minimize_scalar(lambda x: pcf_mu1(a, m, alpha, x), bounds=bounds, method="bounded",
                        options={"xatol": 1e-10})
    return r.x, r.fun


def pcf_alpha0(a, m):
    return brentq(lambda al: pcf_beta(a, m, al)[1], 0.591, 0.99999, xtol=1e-12)


def pcf_theta0():
    # Neumann half-line: D_nu'(-sqrt2 xi) = 0 with lambda = 2 nu + 1
    def lam(xi):
        g = lambda nu: pbdv(nu, -SQ2 * xi)[1]
        nus = np.linspace(-0.5, 0.5, 2001)
        vals = np.array([g(n) for n in nus])
        i = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0][0]
        return 2.0 * brentq(g, nus[i], nus[i + 1], xtol=1e-15) + 1.0
    r = minimize_scalar(lam, bounds=(0.5, 1.0), method="bounded", options={"xatol": 1e-10})
    return r.x, r.fun


# --- independent finite-volume discretization --------------------------------

def assemble(a, m, alpha, xi, h, L=8.0):
    n = int(round(2 * L / h))
    t = -L + h * np.arange(n + 1)
    i0 = n // 2
    t[i0] = 0.0
    kin_face = np.where(t[:-1] + h / 2 < 0, 1.0 / m, 1.0)
    wn = np.where(t < 0, 1.0 / m, 1.0)
    wn[i0] = (1 + 1.0 / m) / 2
    vn = np.where(t < 0, a, -1.0)
    vn[i0] = (a - 1) / 2
    d = (kin_face[:-1] + kin_face[1:]) / h**2 + wn[1:-1] * (t[1:-1] - xi) ** 2 + alpha * vn[1:-1]
    e = -kin_face[1:-1] / h**2
    return t, wn, vn, kin_face, d, e, i0


def fv_ground(a, m, alpha, xi, h):
    t, wn, vn, kf, d, e, i0 = assemble(a, m, alpha, xi, h)
    w, v = eigh_tridiagonal(d, e, select="i", select_range=(0, 0))
    u = np.zeros(t.size)
    u[1:-1] = v[:, 0] / np.sqrt(h)
    if u.sum() < 0:
        u = -u
    return w[0], u, t, wn, vn, kf, d, e, i0


def fv_constants(a, m, alpha, h):
    def mu(xi):
        return fv_ground(a, m, alpha, xi, h)[0]
    r = minimize_scalar(mu, bounds=(0.0, 3.0), method="bounded", options={"xatol": 1e-11})
    xi = r.x
    lam, u, t, wn, vn, kf, d, e, i0 = fv_ground(a, m, alpha, xi, h)
    ip = lambda p, q: h * np.dot(p, q)
    c1 = ip(wn * (t - xi) ** 3, u**2) - 0.5 * (1 - 1 / m) * u[i0] ** 2
    b1 = -ip(vn, u**2)
    g = wn * (t - xi) * u
    H = np.diag(d) + np.diag(e, 1) + np.diag(e, -1) - lam * np.eye(d.size)
    ev = u[1:-1] * np.sqrt(h)
    n = d.size
    K = np.zeros((n + 1, n + 1))
    K[:n, :n] = H
    K[:n, n] = ev
    K[n, :n] = ev
    rhs = np.zeros(n + 1)
    rhs[:n] = g[1:-1] - ip(g, u) * u[1:-1]
    sol = solve(K, rhs, assume_a="sym")[:n]
    i2 = h * np.dot(g[1:-1], sol)
    c2 = ip(wn, u**2) - 4 * i2
    return {"beta": lam, "xi_star": xi, "C1": c1, "b1": b1, "I2": i2, "C2": c2}


def richardson3(vals):
    """h, h/2, h/4 -> eliminate h^2 then h^4."""
    r1 = [(4 * vals[i + 1] - vals[i]) / 3 for i in range(2)]
    return (16 * r1[1] - r1[0]) / 15


def golden_constants(a, m, alpha):
    runs = [fv_constants(a, m, alpha, h) for h in (0.02, 0.01, 0.005)]
    return {k: float(richardson3([r[k] for r in runs])) for k in runs[0]}


def main():
    out = {}
    xi0, th0 = pcf_theta0()
    out["theta0"] = {"value": th0, "xi": xi0}
    out["mu1"] = {
        "a1_m2_alpha0.7_xi0.5": pcf_mu1(1, 2, 0.7, 0.5),
        "a1_m2_alpha0.6_xi0.3": pcf_mu1(1, 2, 0.6, 0.3),
        "a1_m2_alpha0.7_xi8": pcf_mu1(1, 2, 0.7, 8.0),
    }
    out["alpha0"] = {f"a{a:g}_m{m:g}": pcf_alpha0(a, m) for a, m in [(1, 2), (1, 10), (1, 100), (0.5, 5), (2, 50)]}
    pts = {"a1_m2_alpha0.7": (1.0, 2.0, 0.7),
           "a1_m2_alpha0": (1.0, 2.0, out["alpha0"]["a1_m2"]),
           "a1_m10_alpha0": (1.0, 10.0, out["alpha0"]["a1_m10"])}
    out["constants"] = {}
    for key, (a, m, al) in pts.items():
        c = golden_constants(a, m, al)
        xi_pcf, beta_pcf = pcf_beta(a, m, al)
        c["beta_pcf"], c["xi_star_pcf"] = beta_pcf, xi_pcf
        c["alpha"] = al
        out["constants"][key] = c
    path = Path(__file__).resolve().parents[1] / "golden.json"
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(json.dumps(out, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
