import numpy as np
import pytest

from hc3lab.glflow import (
    GLGrid,
    critical_point_diagnostics,
    gauge_transform,
    gl_energy,
    gl_gradient,
    is_nontrivial,
    minimize,
    normal_state,
    quadratic_form,
    second_variation,
)
from hc3lab.model1d import Material
from hc3lab.planar import ellipse_pair

MAT = Material(1.0, 10.0)
KAPPA, H = 4.0, 3.0


@pytest.fixture(scope="module")
def grid():
    return GLGrid.for_field(None, KAPPA, H, nodes=64)


@pytest.fixture(scope="module")
def random_state(grid):
    rng = np.random.default_rng(7)
    st = normal_state(grid, KAPPA, H)
    n, e = grid.n_nodes, grid.n_edges
    st.psi = 0.5 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    st.link = st.link + 0.1 * rng.standard_normal(e)
    return st


@pytest.fixture(scope="module")
def minimizer(grid):
    return minimize(KAPPA, H, MAT, grid, seed=0)


def loop_energy(state, material):
    """Edge-by-edge and plaquette-by-plaquette evaluation of the discrete energy."""
    g = state.grid
    d = g.disc
    w = d.edge_weights(material.m)
    V = d.node_potential(material.a)
    f = d.inner_fraction
    h = g.h
    kin = 0.0
    lookup = {}
    for k, (a, b) in enumerate(d.edges):
        kin += w[k] * abs(state.psi[b] - np.exp(1j * state.link[k]) * state.psi[a]) ** 2
        lookup[(int(a), int(b))] = state.link[k]
        lookup[(int(b), int(a))] = -state.link[k]
    pot = 0.0
    for v in range(d.n):
        r2 = abs(state.psi[v]) ** 2
        pot += state.kappa**2 * h**2 * (V[v] * r2 + 0.5 * f[v] * r2**2)
    jj, ii = np.nonzero(d.active)
    node = {(int(i), int(j)): int(d.index[j, i]) for i, j in zip(ii, jj)}
    mag = 0.0
    for (i, j), v in node.items():
        corners = [v, node.get((i + 1, j)), node.get((i + 1, j + 1)), node.get((i, j + 1))]
        if None in corners:
            continue
        loop = list(zip(corners, corners[1:] + corners[:1]))
        if not all(e in lookup for e in loop):
            continue
        circ = sum(lookup[e] for e in loop)
        mag += (circ - state.kappa * state.H * h**2) ** 2 / h**2
    return kin + pot + mag


def test_normal_state_is_critical(grid):
    st = normal_state(grid, KAPPA, H)
    assert abs(gl_energy(st, MAT)) <= 1e-12
    gp, gl = gl_gradient(st, MAT)
    assert np.max(np.abs(gp)) == 0.0 and np.max(np.abs(gl)) <= 1e-10


def test_energy_matches_loop_oracle(random_state):
    E = gl_energy(random_state, MAT)
    assert E == pytest.approx(loop_energy(random_state, MAT), rel=1e-12)


def test_gauge_invariance(grid, random_state):
    d = grid.disc
    chi = np.sin(3 * d.nodes_x) + d.nodes_x * d.nodes_y
    other = gauge_transform(random_state, chi)
    assert gl_energy(other, MAT) == pytest.approx(gl_energy(random_state, MAT), rel=1e-12)


def test_gradient_directional_derivative(grid, random_state):
    rng = np.random.default_rng(11)
    dp = rng.standard_normal(grid.n_nodes) + 1j * rng.standard_normal(grid.n_nodes)
    dl = rng.standard_normal(grid.n_edges)
    gp, gl = gl_gradient(random_state, MAT)
    exact = float(np.real(np.vdot(gp, dp)) + np.dot(gl, dl))
    eps = 1e-6

    def at(t):
        st = random_state.copy()
        st.psi = st.psi + t * dp
        st.link = st.link + t * dl
        return gl_energy(st, MAT)

    fd = (at(eps) - at(-eps)) / (2 * eps)
    assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


def test_second_variation_is_quadratic_form(grid):
    rng = np.random.default_rng(5)
    phi = rng.standard_normal(grid.n_nodes) + 1j * rng.standard_normal(grid.n_nodes)
    q = quadratic_form(grid, MAT, KAPPA, H, phi)
    assert second_variation(grid, MAT, KAPPA, H, phi) == pytest.approx(q, rel=1e-10)


def test_negative_mu_gives_nontrivial_minimizer(grid, minimizer):
    assert grid.linear_mu(MAT, KAPPA, H) < 0
    assert minimizer.converged
    assert minimizer.energy < 0 and is_nontrivial(minimizer)


def test_large_field_is_normal():
    kappa, Hn = 2.0, 20.0
    g = GLGrid.for_field(None, kappa, Hn)
    for init in ("normal_perturbed", "meissner"):
        st = minimize(kappa, Hn, MAT, g, init=init, seed=0)
        assert st.converged
        assert st.energy >= -1e-8 and not is_nontrivial(st)


def test_energy_decreases_with_iterations(grid):
    early = minimize(KAPPA, H, MAT, grid, seed=0, max_iter=10)
    late = minimize(KAPPA, H, MAT, grid, seed=0, max_iter=200)
    assert late.energy <= early.energy


def test_minimize_validates():
    with pytest.raises(ValueError):
        minimize(0.0, 1.0, MAT)


def test_diagnostics_bounds(minimizer):
    rep = critical_point_diagnostics(minimizer, MAT)
    assert rep["max_abs_psi"] <= 1.0 + 1e-12
    assert rep["nabla_norm"] <= rep["nabla_bound"]
    assert rep["l4_sq_omega"] <= rep["l2_omega"] + 1e-12
    assert rep["advisory"] is False


def test_diagnostics_gauge_invariant(grid, minimizer):
    d = grid.disc
    chi = np.cos(2 * d.nodes_y) - d.nodes_x
    a = critical_point_diagnostics(minimizer, MAT)
    b = critical_point_diagnostics(gauge_transform(minimizer, chi), MAT)
    for k, v in a.items():
        if isinstance(v, float) and np.isfinite(v):
            assert b[k] == pytest.approx(v, rel=1e-8, abs=1e-12), k


def test_ellipse_grid_builds():
    g = GLGrid.build(ellipse_pair(), nodes=40)
    assert g.plaquettes.shape[1] == 4 and g.n_edges > g.n_nodes
