"""Closed-form minimizer of ||A x - b||_inf over matrices with A + A^T <= 0.

The optimum splits into a multiple of the identity (symmetric part) and a
rank-2 skew-symmetric part built from the optimal residual direction. An
independent bisection oracle for the optimal value is provided for
verification; it never calls the closed form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Array = np.ndarray

#: below this 1-norm or 2-norm, x is treated as zero and rejected
DEGENERATE_NORM = 1e-12


@dataclass(frozen=True)
class ShapeSolution:
    """Optimal matrices and certificates for one instance.

    a_s is the quadratic form x^T A_s x; xi is the optimal residual
    (elementwise equal magnitude); v = A_w x is orthogonal to x; phi is
    the optimal objective value.
    """

    A_s: Array
    A_w: Array
    a_s: float
    xi: Array
    v: Array
    phi: float

    @property
    def A(self) -> Array:
        return self.A_s + self.A_w


def _check_instance(x: Array, b: Array) -> tuple[Array, Array]:
    x = np.asarray(x, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if x.shape != b.shape:
        raise ValueError(f"x and b must have equal length, got {x.size} and {b.size}")
    if x.size == 0:
        raise ValueError("empty instance")
    if np.abs(x).sum() < DEGENERATE_NORM or float(x @ x) < DEGENERATE_NORM ** 2:
        raise ValueError("x is zero (or numerically degenerate); the problem is undefined")
    return x, b


def solve(x, b) -> ShapeSolution:
    """Minimize ||A x - b||_inf subject to A + A^T negative semidefinite.

    Closed form: the symmetric part is (a_s / ||x||^2) I with
    a_s = min(0, x.b); the skew part is the rank-2 matrix mapping x onto
    v = b - A_s x - xi, where xi carries the optimal residual with entries
    sign(x_i) (x.b - a_s) / ||x||_1 (sign(0) taken as 0). The optimum is
    max(0, x.b / ||x||_1), attained exactly; when x.b <= 0 the target b is
    reproduced exactly and the residual is zero.
    """
    x, b = _check_instance(x, b)
    n = x.size
    xb = float(x @ b)
    norm1 = float(np.abs(x).sum())
    norm2sq = float(x @ x)

    a_s = min(0.0, xb)
    xi = np.sign(x) * ((xb - a_s) / norm1)
    A_s = (a_s / norm2sq) * np.eye(n)
    v = b - A_s @ x - xi
    A_w = (np.outer(v, x) - np.outer(x, v)) / norm2sq
    phi = xb / norm1 if xb > 0.0 else 0.0
    return ShapeSolution(A_s=A_s, A_w=A_w, a_s=a_s, xi=xi, v=v, phi=phi)


def oracle_phi(x, b, tol: float = 1e-12) -> float:
    """Optimal value of min ||y - b||_inf over the half-space x.y <= 0, by bisection.

    The feasible images {A x : A + A^T <= 0} fill exactly this half-space,
    so the bisection radius t is feasible iff the inf-ball of radius t
    around b meets it: x.b - t ||x||_1 <= 0. The reduction is validated
    against brute-force sampling of feasible matrices in the test suite.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x, b = _check_instance(x, b)
    norm1 = float(np.abs(x).sum())
    xb = float(x @ b)

    def feasible(t: float) -> bool:
        return xb - t * norm1 <= 0.0

    if feasible(0.0):
        return 0.0
    lo, hi = 0.0, float(np.abs(b).sum()) + 1.0  # t = ||b||_1 + 1 is always feasible
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def check_feasible(A, tol: float = 0.0) -> bool:
    """True iff the symmetric part of A has no eigenvalue above tol."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    sym = 0.5 * (A + A.T)
    return bool(np.linalg.eigvalsh(sym)[-1] <= tol)
