"""Bounded sparse KLR dual: objective, gradient, entropy term and KKT checks.

The problem solved is::

    min_a  1/2 sum_ij y_i y_j a_i a_j K_ij + C sum_i G(a_i / C) - lam sum_i a_i
    s.t.   sum_i a_i y_i = 0,   gamma <= a_i <= C - gamma

with ``G(d) = d log d + (1 - d) log(1 - d)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, SolverContractError
from .kernel import KernelCache


@dataclass(frozen=True)
class Hyperparams:
    C: float = 1.0
    lam: float = 0.0
    gamma: float = 1e-5
    kkt_tol: float = 1e-5
    max_iter: int = 10000
    selection_threshold: float = 1e-5

    def __post_init__(self):
        if not self.C > 0:
            raise DataError(f"C must be > 0, got {self.C}")
        if not self.lam >= 0:
            raise DataError(f"lambda must be >= 0, got {self.lam}")
        if not self.gamma > 0:
            raise DataError(f"gamma must be > 0, got {self.gamma}")
        if not self.gamma < self.C / 2:
            raise DataError(f"gamma={self.gamma} must be < C/2={self.C / 2}")
        if not self.kkt_tol > 0:
            raise DataError(f"kkt_tol must be > 0, got {self.kkt_tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise DataError(f"max_iter must be a positive integer, got {self.max_iter}")
        if not self.selection_threshold > 0:
            raise DataError("selection_threshold must be > 0")

    @property
    def lower(self) -> float:
        return self.gamma

    @property
    def upper(self) -> float:
        return self.C - self.gamma

    def with_(self, **kw) -> "Hyperparams":
        from dataclasses import replace

        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "lambda": self.lam,
            "gamma": self.gamma,
            "kkt_tol": self.kkt_tol,
            "max_iter": int(self.max_iter),
            "selection_threshold": self.selection_threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        d = dict(d)
        d["lam"] = d.pop("lambda")
        return cls(**d)


@dataclass
class DualState:
    """Dual iterate with the cached linear term ``m_s = sum_t a_t y_t K_st``."""

    alpha: np.ndarray
    y: np.ndarray
    cache: KernelCache
    m: np.ndarray = None
    iterations: int = 0

    def __post_init__(self):
        self.alpha = np.array(self.alpha, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.alpha.shape != self.y.shape or self.alpha.shape[0] != self.cache.n:
            raise DataError("alpha, labels and kernel cache sizes disagree")
        if self.m is None:
            self.m = self.recompute_m()
        else:
            self.m = np.array(self.m, dtype=float)

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    def recompute_m(self) -> np.ndarray:
        beta = self.alpha * self.y
        if self.cache.mode == "full":
            return self.cache.matrix() @ beta
        m = np.zeros(self.n)
        for t in np.flatnonzero(beta):
            m += beta[t] * self.cache.row(t)
        return m

    def copy(self) -> "DualState":
        return DualState(self.alpha.copy(), self.y, self.cache, self.m.copy(), self.iterations)


def _check_unit(delta):
    d = np.asarray(delta, dtype=float)
    if np.any(~(d > 0.0)) or np.any(~(d < 1.0)):
        raise ValueError("entropy term is defined on the open interval (0, 1)")
    return d


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def entropy_G(delta):
    """``d log d + (1 - d) log(1 - d)``; values in ``[-log 2, 0)``."""
    d = _check_unit(delta)
    return _out(d * np.log(d) + (1.0 - d) * np.log1p(-d))


def entropy_Gp(delta):
    """First derivative ``log(d / (1 - d))``, the inverse of the logistic function."""
    d = _check_unit(delta)
    return _out(np.log(d) - np.log1p(-d))


def entropy_Gpp(delta):
    """Second derivative ``1 / (d (1 - d))``; never below 4."""
    d = _check_unit(delta)
    return _out(1.0 / (d * (1.0 - d)))


def gp_scaled(alpha, C):
    """``G'(a / C)`` evaluated as ``log a - log(C - a)`` (accurate near both bounds)."""
    return np.log(alpha) - np.log(C - alpha)


def curvature(alpha, C):
    """``(1/C) G''(a / C) = C / (a (C - a))``, the entropy part of the Hessian diagonal."""
    return C / (alpha * (C - alpha))


def objective_of(alpha, y, m, h: Hyperparams) -> float:
    alpha = np.asarray(alpha, dtype=float)
    quad = 0.5 * float(np.dot(alpha * y, m))
    ent = h.C * float(np.sum(entropy_G(alpha / h.C)))
    return quad + ent - h.lam * float(np.sum(alpha))


def objective(state: DualState, h: Hyperparams) -> float:
    return objective_of(state.alpha, state.y, state.m, h)


def gradient(state: DualState, h: Hyperparams) -> np.ndarray:
    """Full gradient ``y_i m_i + G'(a_i / C) - lam``."""
    return state.y * state.m + gp_scaled(state.alpha, h.C) - h.lam


def gradient_component(state: DualState, h: Hyperparams, i: int) -> float:
    if not 0 <= i < state.n:
        raise IndexError(f"index {i} out of range for {state.n} variables")
    a = state.alpha[i]
    return float(state.y[i] * state.m[i] + np.log(a) - np.log(h.C - a) - h.lam)


def violations(state: DualState, h: Hyperparams) -> np.ndarray:
    """The vector ``-y_i grad_i`` compared across the KKT index sets."""
    return -state.y * gradient(state, h)


def index_masks(alpha, y, h: Hyperparams) -> tuple[np.ndarray, np.ndarray]:
    below_top = alpha < h.upper
    above_bottom = alpha > h.lower
    pos = y > 0
    up = (below_top & pos) | (above_bottom & ~pos)
    low = (below_top & ~pos) | (above_bottom & pos)
    return up, low


def index_sets(state: DualState, h: Hyperparams) -> tuple[np.ndarray, np.ndarray]:
    """Indices in I_up and I_low; strictly interior points belong to both."""
    up, low = index_masks(state.alpha, state.y, h)
    return np.flatnonzero(up), np.flatnonzero(low)


def kkt_gap(F, up, low) -> float:
    if not up.any() or not low.any():
        raise SolverContractError("empty I_up or I_low: degenerate boundary state")
    return float(F[up].max() - F[low].min())


def kkt_residual(state: DualState, h: Hyperparams) -> float:
    """``max_{I_up} -y grad - min_{I_low} -y grad``; optimal when ``<= kkt_tol``."""
    up, low = index_masks(state.alpha, state.y, h)
    return kkt_gap(violations(state, h), up, low)
