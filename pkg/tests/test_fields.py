from types import SimpleNamespace

import numpy as np
import pytest

from hc3lab.band import alpha0
from hc3lab.fields import (
    condition_m_check,
    db_lambda1_pm,
    disc_mode_crossings,
    hc3_asymptotic,
    hc3_star,
    lambda1,
    mu_linear,
)
from hc3lab.model1d import Material
from hc3lab.planar import concentric_discs, mu1_disc_fourier

M10 = Material(1.0, 10.0)
DISC = concentric_discs()


def test_mu_linear_definition():
    kappa, H = 10.0, 12.0
    p = mu_linear(kappa, H, DISC, M10)
    assert p.B == pytest.approx(kappa * H) and p.alpha == pytest.approx(kappa / H)
    assert p.mu == pytest.approx(mu1_disc_fourier(DISC, M10, p.B, p.alpha).mu1, abs=1e-12)
    assert lambda1(p.B, p.alpha, DISC, M10) == pytest.approx(p.mu + p.alpha * p.B, abs=1e-9)


def test_mu_sign_at_extremes():
    kappa = 10.0
    assert mu_linear(kappa, 0.6 * kappa, DISC, M10).mu < 0
    assert mu_linear(kappa, 10.0 * kappa, DISC, M10).mu > 0


def test_invalid_inputs():
    with pytest.raises(ValueError):
        mu_linear(-1.0, 1.0, DISC, M10)
    with pytest.raises(ValueError):
        mu_linear(1.0, 1.0, DISC, M10, method="spectral")


def test_crossings_right_below_left():
    a = alpha0(M10)
    xs = disc_mode_crossings(1000.0, 1010.0, a, DISC, M10)
    assert xs
    for c in xs:
        assert c.right <= c.left + 1e-9
        assert len(c.modes) == 2 and abs(c.modes[1] - c.modes[0]) == 1
        assert 1000.0 <= c.B <= 1010.0


def test_one_sided_derivative_away_from_crossing():
    a = alpha0(M10)
    d = db_lambda1_pm(800.0, a, DISC, M10)
    assert d.converged
    assert d.right <= d.left + 1e-6


def test_condition_m():
    assert condition_m_check(Material(1.0, 50.0))["holds"] is True
    fake = SimpleNamespace(alpha0=1.0, C2=0.0, theta0=0.0)
    assert condition_m_check(M10, constants=fake)["holds"] is None


def test_hc3_star_small_kappa(consts_m10):
    rep = hc3_star(10.0, DISC, M10, n_check=3, n_ceiling=3, constants=consts_m10)
    assert rep.positive_above
    assert abs(rep.H_star - rep.H_asym) / rep.H_asym <= 0.01
    assert rep.H_asym == pytest.approx(hc3_asymptotic(10.0, DISC, M10, consts_m10))
    assert mu_linear(10.0, rep.H_star * (1 - 1e-3), DISC, M10).mu < 0
    assert np.all(np.diff([h for h, _ in rep.scan]) > 0)
