"""Reference solvers for small instances, used to certify the SMO solver.

They share no code path with the SMO loop: the kernel matrix is built
densely, and the stationarity system of the *unbounded* problem (no gamma
box) is solved directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .data import Dataset
from .dual import Hyperparams
from .errors import DataError, SklrError
from .kernel import KernelSpec, kernel_matrix


class OracleError(SklrError, RuntimeError):
    pass


@dataclass(frozen=True)
class OracleSolution:
    alpha: np.ndarray
    psi: float
    kkt_norm: float
    newton_iterations: int


def _entropy_sum(alpha, C):
    d = alpha / C
    return C * np.sum(d * np.log(d) + (1.0 - d) * np.log1p(-d))


def _f(alpha, Q, C, lam):
    return 0.5 * alpha @ Q @ alpha + _entropy_sum(alpha, C) - lam * alpha.sum()


def kkt_newton_solve(d: Dataset, k: KernelSpec, h: Hyperparams,
                     tol: float = 1e-10, max_iter: int = 200) -> OracleSolution:
    """Damped Newton on ``(grad f(a) + psi' y, y^T a) = 0`` inside the open box ``(0, C)^N``.

    ``tol`` is relative to ``max(1, max|Q a| + lam)``. The returned ``psi`` follows the sign convention
    ``lam - y_i sum_j a_j y_j K_ij + y_i psi = log(a_i / (C - a_i))``.
    """
    n = d.n
    if n > 200:
        raise DataError(f"oracle is limited to N <= 200, got {n}")
    d.require_trainable()
    C, lam = h.C, h.lam
    y = d.labels
    K = kernel_matrix(k, d.features, d.features)
    Q = np.outer(y, y) * K
    n_pos, n_neg = d.n_pos, d.n_neg
    n_min = min(n_pos, n_neg)
    alpha = np.where(y > 0, C * n_min / (2.0 * n_pos), C * n_min / (2.0 * n_neg))
    A = np.zeros((n + 1, n + 1))
    A[:n, n] = y
    A[n, :n] = y
    f = _f(alpha, Q, C, lam)
    for it in range(max_iter + 1):
        g = Q @ alpha + np.log(alpha) - np.log(C - alpha) - lam
        psi_ls = -float(y @ g) / n
        res = max(np.max(np.abs(g + psi_ls * y)), abs(float(y @ alpha)))
        # roundoff floor grows with the size of the gradient terms
        if res <= tol * max(1.0, float(np.max(np.abs(Q @ alpha))) + lam):
            return OracleSolution(alpha, -psi_ls, float(res), it)
        if it == max_iter:
            break
        A[:n, :n] = Q
        A[np.arange(n), np.arange(n)] += C / (alpha * (C - alpha))
        rhs = np.concatenate([-g, [-float(y @ alpha)]])
        sol = np.linalg.solve(A, rhs)
        step = sol[:n]
        s = 1.0
        while np.any(alpha + s * step <= 0.0) or np.any(alpha + s * step >= C):
            s *= 0.5
        slope = float(g @ step)
        for _ in range(60):
            cand = alpha + s * step
            f_new = _f(cand, Q, C, lam)
            if f_new <= f + 1e-4 * s * slope + 1e-13 * abs(f):
                break
            s *= 0.5
        alpha, f = cand, f_new
    raise OracleError(f"KKT Newton did not converge in {max_iter} iterations (residual {res:.3g})")


def stationarity_residual(d: Dataset, k: KernelSpec, h: Hyperparams, alpha, psi) -> float:
    """Max violation of ``lam - y_i m_i + y_i psi = log(a_i / (C - a_i))`` over all i."""
    y = d.labels
    K = kernel_matrix(k, d.features, d.features)
    m = K @ (alpha * y)
    lhs = h.lam - y * m + y * psi
    rhs = np.log(alpha) - np.log(h.C - alpha)
    return float(np.max(np.abs(lhs - rhs)))


def reduced_1d_oracle(d: Dataset, k: KernelSpec, h: Hyperparams) -> np.ndarray:
    """Two opposite-label points: the constraint forces ``a_1 = a_2 = a``.

    Minimizes ``a^2 (K11 + K22 - 2 K12) / 2 + 2 C G(a / C) - 2 lam a`` over
    ``[gamma, C - gamma]``: a dense grid brackets the minimizer, then Brent's
    root finder solves for the zero of the (increasing) derivative.
    """
    if d.n != 2 or d.labels[0] == d.labels[1]:
        raise DataError("reduced oracle needs exactly two points with opposite labels")
    K = kernel_matrix(k, d.features, d.features)
    eta = K[0, 0] + K[1, 1] - 2.0 * K[0, 1]
    C, lam = h.C, h.lam

    def phi(a):
        u = a / C
        return 0.5 * a * a * eta + 2.0 * C * (u * np.log(u) + (1 - u) * np.log1p(-u)) - 2.0 * lam * a

    def dphi(a):
        return a * eta + 2.0 * (np.log(a) - np.log(C - a)) - 2.0 * lam

    grid = np.linspace(h.lower, h.upper, 4001)
    kbest = int(np.argmin(phi(grid)))
    lo = grid[max(kbest - 1, 0)]
    hi = grid[min(kbest + 1, grid.size - 1)]
    if dphi(lo) >= 0.0:
        a = lo
    elif dphi(hi) <= 0.0:
        a = hi
    else:
        a = brentq(dphi, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    return np.array([a, a])
