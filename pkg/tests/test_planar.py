import numpy as np
import pytest

from hc3lab.band import alpha0
from hc3lab.model1d import Material
from hc3lab.planar import (
    CartesianGrid,
    concentric_discs,
    curvature_point_mass,
    discretize,
    ellipse_pair,
    mu1_2d_fd,
    mu1_disc_fourier,
    node_divergence,
    plaquette_curl,
    radial_grid,
    reference_field,
)

M10 = Material(1.0, 10.0)


@pytest.fixture(scope="module")
def a10():
    return alpha0(M10)


@pytest.mark.parametrize("geom", [concentric_discs(), ellipse_pair()], ids=["disc", "ellipse"])
def test_reference_field_closed_form(geom):
    disc = discretize(geom, 40.0)
    fld = reference_field(geom, disc.grid, "closed_form")
    np.testing.assert_allclose(plaquette_curl(fld, disc), 1.0, atol=1e-12)
    assert np.max(np.abs(node_divergence(fld, disc))) <= 1e-9


def test_reference_field_stream_ellipse():
    geom = ellipse_pair()
    disc = discretize(geom, 40.0)
    fld = reference_field(geom, disc.grid, "stream")
    assert np.max(np.abs(plaquette_curl(fld, disc) - 1.0)) <= 1e-8


def test_gauge_invariance(a10):
    geom = concentric_discs()
    base = mu1_2d_fd(geom, M10, 10.0, a10, points_per_unit=32)
    chi = lambda x, y: np.sin(2 * x) * np.cos(3 * y) + x * y  # noqa: E731
    gauged = mu1_2d_fd(geom, M10, 10.0, a10, points_per_unit=32, gauge=chi)
    assert gauged.mu1 == pytest.approx(base.mu1, abs=1e-8 * max(1.0, abs(base.mu1)))


def test_zero_field(a10):
    assert abs(mu1_2d_fd(concentric_discs(), M10, 0.0, a10, points_per_unit=24).mu1) <= 1e-8


def test_invalid_arguments(a10):
    with pytest.raises(ValueError):
        mu1_2d_fd(concentric_discs(), M10, -1.0, a10)
    with pytest.raises(ValueError):
        mu1_disc_fourier(ellipse_pair(), M10, 100.0, a10)


def test_fd_matches_fourier(a10):
    geom = concentric_discs()
    B = 100.0
    fd = mu1_2d_fd(geom, M10, B, a10, points_per_unit=96)
    fo = mu1_disc_fourier(geom, M10, B, a10)
    # compare lambda_1 = mu_1 + alpha B; mu_1 itself is near zero at alpha0
    shift = a10 * B
    assert fd.mu1 + shift == pytest.approx(fo.mu1 + shift, rel=0.01)


def test_winning_mode_offset_bounded(a10):
    for B in (400.0, 900.0, 1600.0):
        eig = mu1_disc_fourier(concentric_discs(), M10, B, a10)
        assert eig.delta is not None and abs(eig.delta) <= 12


def test_inner_truncation_harmless(a10):
    geom = concentric_discs()
    B = 400.0
    vals = [
        mu1_disc_fourier(geom, M10, B, a10, rgrid=radial_grid(geom, B, rho_min=r)).mu1
        for r in (0.5, 0.25)
    ]
    assert abs(vals[0] - vals[1]) <= 1e-8 * B


def test_boundary_localization(a10):
    geom = concentric_discs()
    masses = [mu1_2d_fd(geom, M10, B, a10).boundary_mass_fraction for B in (200.0, 500.0)]
    assert masses[1] >= 0.8
    assert masses[1] >= masses[0] - 1e-3


def test_operator_hermitian(a10):
    from hc3lab.planar import assemble_planar_operator

    geom = ellipse_pair()
    disc = discretize(geom, 30.0)
    mat = assemble_planar_operator(disc, M10, 50.0, a10, reference_field(geom, disc.grid))
    assert abs(mat - mat.getH()).max() <= 1e-12


def test_disc_envelope(a10, consts_m10):
    B = 500.0
    eig = mu1_disc_fourier(concentric_discs(), M10, B, a10)
    c = consts_m10
    lead = c.beta * B + c.C1 * np.sqrt(B)
    assert abs(eig.mu1 - lead) <= abs(c.C2) + 1.0


def test_cartesian_grid_covers_geometry():
    geom = ellipse_pair()
    g = CartesianGrid.covering(geom, 20.0)
    x0, x1, y0, y1 = geom.bounding_box()
    assert g.x[0] <= x0 and g.x[-1] >= x1 and g.y[0] <= y0 and g.y[-1] >= y1


@pytest.mark.xfail(strict=True, reason="at B = 800 the ellipse ground state carries 0.54 of its mass within "
                   "arc 0.3 of the curvature maximizers, short of 0.6; the fraction grows with B")
def test_ellipse_curvature_concentration(a10):
    geom = ellipse_pair()
    ppu = 6.0 * np.sqrt(800.0)
    eig = mu1_2d_fd(geom, M10, 800.0, a10, points_per_unit=ppu, return_vector=True)
    assert curvature_point_mass(geom, eig, ppu) >= 0.6
