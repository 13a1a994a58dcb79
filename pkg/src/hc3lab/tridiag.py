"""Symmetric tridiagonal kernel: Sturm-sequence bisection and inverse iteration."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from scipy.linalg import solve_banded

__all__ = [
    "ConvergenceError",
    "SymTridiagonal",
    "sturm_count",
    "bisect_eigenvalue",
    "lowest_eigenpair",
    "TridiagEigenpair",
]


class ConvergenceError(RuntimeError):
    """An iterative numerical routine failed to reach its tolerance."""


@dataclass(frozen=True)
class SymTridiagonal:
    """Symmetric tridiagonal matrix stored as (diagonal, off-diagonal)."""

    diag: np.ndarray
    off: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(self.diag, dtype=float)
        e = np.ascontiguousarray(self.off, dtype=float)
        if d.ndim != 1 or e.ndim != 1 or e.size != max(d.size - 1, 0):
            raise ValueError("off-diagonal must have length len(diag) - 1")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "off", e)

    @property
    def n(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.off * x[1:]
        y[1:] += self.off * x[:-1]
        return y

    def banded(self, shift: float = 0.0) -> np.ndarray:
        """Return (T - shift) in LAPACK general-band layout (1, 1)."""
        ab = np.zeros((3, self.n))
        ab[0, 1:] = self.off
        ab[1] = self.diag - shift
        ab[2, :-1] = self.off
        return ab

    def solve(self, rhs: np.ndarray, shift: float = 0.0) -> np.ndarray:
        return solve_banded((1, 1), self.banded(shift), rhs, check_finite=False)

    def gershgorin(self) -> tuple[float, float]:
        r = np.zeros(self.n)
        r[:-1] += np.abs(self.off)
        r[1:] += np.abs(self.off)
        return float(np.min(self.diag - r)), float(np.max(self.diag + r))


@numba.njit(cache=True)
def _sturm_count(d, e2, x, pivmin):
    count = 0
    q = d[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0.0:
        count += 1
    for i in range(1, d.size):
        q = d[i] - x - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            count += 1
    return count


@numba.njit(cache=True)
def _bisect(d, e2, k, lo, hi, tol, pivmin, max_iter):
    # smallest x with count(x) > k, i.e. the (k+1)-th eigenvalue
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _sturm_count(d, e2, mid, pivmin) > k:
            hi = mid
        else:
            lo = mid
        it += 1
    return 0.5 * (lo + hi), it


def _pivmin(t: SymTridiagonal) -> float:
    scale = max(np.max(np.abs(t.diag)), np.max(np.abs(t.off)) if t.n > 1 else 0.0, 1.0)
    return np.finfo(float).tiny / np.finfo(float).eps * scale


def sturm_count(t: SymTridiagonal, x: float) -> int:
    """Number of eigenvalues of ``t`` strictly below ``x``."""
    return int(_sturm_count(t.diag, t.off**2, float(x), _pivmin(t)))


def bisect_eigenvalue(t: SymTridiagonal, k: int = 0, tol: float = 1e-12) -> float:
    """The ``k``-th (0-based) eigenvalue by Sturm bisection.

    ``tol`` is absolute, but never tighter than the rounding floor
    ``4 * eps * ||T||``.
    """
    if not 0 <= k < t.n:
        raise ValueError("eigenvalue index out of range")
    lo, hi = t.gershgorin()
    span = max(abs(lo), abs(hi), 1.0)
    eps = np.finfo(float).eps
    lo -= 2 * eps * span
    hi += 2 * eps * span
    tol_eff = max(tol, 4 * eps * span)
    value, _ = _bisect(t.diag, t.off**2, k, lo, hi, tol_eff, _pivmin(t), 400)
    return float(value)


@dataclass(frozen=True)
class TridiagEigenpair:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int


def lowest_eigenpair(
    t: SymTridiagonal, tol: float = 1e-12, max_iter: int = 25
) -> TridiagEigenpair:
    """Lowest eigenpair: Sturm bisection for the value, inverse iteration for the vector.

    The vector has unit Euclidean norm. Its sign is fixed so the largest entry
    is positive; for matrices with non-positive off-diagonals (where the ground
    state is a Perron vector) all entries are returned non-negative.
    """
    if t.n < 3:
        raise ValueError("matrix dimension must be at least 3")
    value = bisect_eigenvalue(t, 0, tol)
    norm_t = max(np.max(np.abs(t.diag)) + 2 * np.max(np.abs(t.off)), 1.0)
    # a tiny shift below the eigenvalue keeps the factorization nonsingular
    shift = value - 64 * np.finfo(float).eps * norm_t
    rng = np.random.default_rng(12345)
    x = np.abs(rng.standard_normal(t.n)) + 1.0
    x /= np.linalg.norm(x)
    target = max(1e3 * np.finfo(float).eps * norm_t, tol)
    residual = np.inf
    for it in range(1, max_iter + 1):
        y = t.solve(x, shift)
        nrm = np.linalg.norm(y)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise ConvergenceError("inverse iteration produced a degenerate iterate")
        x = y / nrm
        residual = float(np.linalg.norm(t.matvec(x) - value * x))
        if residual <= target and it >= 2:
            break
    else:
        raise ConvergenceError(
            f"inverse iteration did not converge in {max_iter} steps "
            f"(residual {residual:.3e}, target {target:.3e})"
        )
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    if np.all(t.off <= 0.0):
        x = np.abs(x)
    return TridiagEigenpair(value=value, vector=x, residual=residual, iterations=it)
