"""Working-set selection: maximal violating pair and the second-order rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dual import DualState, Hyperparams, curvature, index_masks, violations
from .errors import SolverContractError

FIRST_ORDER = "first_order"
SECOND_ORDER = "second_order"
_TINY_Q = 1e-12


@dataclass(frozen=True)
class WssChoice:
    i: int
    j: int
    violation: float
    score: float


def _mvp(F, up, low):
    if not up.any() or not low.any():
        raise SolverContractError("empty I_up or I_low: degenerate boundary state")
    i = int(np.argmax(np.where(up, F, -np.inf)))
    j = int(np.argmin(np.where(low, F, np.inf)))
    return i, j, float(F[i] - F[j])


def _second_order_j(i, F, low, krow, diag, curv):
    """Best partner of ``i`` by the quadratic-model decrease ``v^2 / q``.

    Only ``j`` in I_low with ``F_j < F_i`` are eligible; returns ``(j, v, score)``
    or ``None`` when there is none. Ties go to the smallest index.
    """
    v = F[i] - F
    eligible = low & (v > 0.0)
    if not eligible.any():
        return None
    q = diag[i] + diag - 2.0 * krow + curv[i] + curv
    q = np.where(q > 0.0, q, _TINY_Q)
    score = np.where(eligible, v * v / q, -np.inf)
    j = int(np.argmax(score))
    return j, float(v[j]), float(score[j])


def select_mvp(state: DualState, h: Hyperparams) -> WssChoice | None:
    """Maximal violating pair, or ``None`` when the KKT gap is within tolerance."""
    F = violations(state, h)
    up, low = index_masks(state.alpha, state.y, h)
    i, j, gap = _mvp(F, up, low)
    if gap <= h.kkt_tol:
        return None
    return WssChoice(i, j, gap, gap)


def select_second_order(state: DualState, h: Hyperparams) -> WssChoice | None:
    """First index from the MVP, second index maximizing ``v^2 / q``.

    ``None`` signals optimality (MVP gap within ``kkt_tol``).
    """
    F = violations(state, h)
    up, low = index_masks(state.alpha, state.y, h)
    i, _, gap = _mvp(F, up, low)
    if gap <= h.kkt_tol:
        return None
    K = state.cache
    j, v, score = _second_order_j(i, F, low, K.row(i), K.diag, curvature(state.alpha, h.C))
    return WssChoice(i, j, v, score)


def pair_q(state: DualState, h: Hyperparams, i: int, j: int) -> float:
    """``K_ii + K_jj - 2 K_ij + C/(a_i (C - a_i)) + C/(a_j (C - a_j))``."""
    K = state.cache
    a = state.alpha
    return float(
        K.diag[i] + K.diag[j] - 2.0 * K.entry(i, j)
        + h.C / (a[i] * (h.C - a[i])) + h.C / (a[j] * (h.C - a[j]))
    )
