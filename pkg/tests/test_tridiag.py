import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh_tridiagonal

from hc3lab.tridiag import ConvergenceError, SymTridiagonal, bisect_eigenvalue, lowest_eigenpair, sturm_count


def test_diagonal_case():
    p = lowest_eigenpair(SymTridiagonal(np.array([3.0, 1.0, 2.0]), np.zeros(2)))
    assert p.value == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(np.abs(p.vector), [0.0, 1.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("n", [3, 10, 200])
def test_dirichlet_laplacian_closed_form(n):
    h = 1.0 / (n + 1)
    t = SymTridiagonal(np.full(n, 2.0 / h**2), np.full(n - 1, -1.0 / h**2))
    expected = (2.0 - 2.0 * np.cos(np.pi / (n + 1))) / h**2
    # bisection tolerance: 1e-12, or a few ulps of the matrix norm 4 / h^2
    assert lowest_eigenpair(t).value == pytest.approx(expected, abs=max(2e-12, 16 * np.finfo(float).eps * 4 / h**2))


def test_random_matches_dense_oracle():
    rng = np.random.default_rng(7)
    d, e = rng.standard_normal(50), rng.standard_normal(49)
    p = lowest_eigenpair(SymTridiagonal(d, e))
    ref = eigh_tridiagonal(d, e, eigvals_only=True)[0]
    assert abs(p.value - ref) <= 1e-12 * max(1.0, abs(ref))
    assert p.residual <= 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 40), st.integers(0, 2**31 - 1))
def test_sturm_count_matches_spectrum(n, seed):
    rng = np.random.default_rng(seed)
    t = SymTridiagonal(rng.uniform(-3, 3, n), rng.uniform(-1, 1, n - 1))
    ev = np.sort(eigh_tridiagonal(t.diag, t.off, eigvals_only=True))
    x = float(rng.uniform(-4, 4))
    if np.min(np.abs(ev - x)) > 1e-9:
        assert sturm_count(t, x) == int(np.sum(ev < x))
    k = int(rng.integers(0, n))
    assert bisect_eigenvalue(t, k) == pytest.approx(ev[k], abs=1e-10)


def test_perron_vector_nonnegative():
    n = 30
    t = SymTridiagonal(np.linspace(1, 2, n), -np.ones(n - 1))
    assert np.all(lowest_eigenpair(t).vector >= 0)


def test_too_small_rejected():
    with pytest.raises(ValueError):
        lowest_eigenpair(SymTridiagonal(np.ones(2), np.zeros(1)))


def test_convergence_error_is_runtime_error():
    assert issubclass(ConvergenceError, RuntimeError)
