"""SMO decomposition loop for the bounded sparse KLR dual."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, asdict

import numpy as np

from .data import Dataset
from .dual import DualState, Hyperparams, curvature, gp_scaled, index_masks, objective
from .errors import DataError
from .kernel import KernelCache, KernelSpec, build_cache
from .subproblem import PairLine, step_interval
from .wss import FIRST_ORDER, SECOND_ORDER, _mvp, _second_order_j

log = logging.getLogger(__name__)

WSS_KINDS = (FIRST_ORDER, SECOND_ORDER)
# relative roundoff allowance when auditing the sufficient-decrease inequality
AUDIT_RTOL = 1e-12


@dataclass
class SolveReport:
    iterations: int
    kkt_residual_final: float
    objective_final: float
    termination: str
    wall_time: float
    wss_kind: str
    decrease_audit_violations: int = 0
    audited_iterations: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def init_alpha(d: Dataset, h: Hyperparams) -> np.ndarray:
    """Feasible starting point with ``sum a y = 0`` inside the box.

    Class sizes ``m+`` and ``m-`` give ``a = 1/m+`` on positives and ``1/m-``
    on negatives when both values lie in ``[gamma, C - gamma]``. Otherwise
    the majority class starts at ``gamma`` and the minority class at
    ``gamma * m_maj / m_min``.
    """
    d.require_trainable()
    pos = d.labels > 0
    n_pos, n_neg = d.n_pos, d.n_neg
    a_pos, a_neg = 1.0 / n_pos, 1.0 / n_neg
    if all(h.lower <= a <= h.upper for a in (a_pos, a_neg)):
        return np.where(pos, a_pos, a_neg)
    n_maj, n_min = max(n_pos, n_neg), min(n_pos, n_neg)
    a_min = h.gamma * n_maj / n_min
    if a_min > h.upper:
        raise DataError(
            f"no feasible start: minority value gamma*{n_maj}/{n_min}={a_min:.3g} "
            f"exceeds C - gamma={h.upper:.3g}; increase C or decrease gamma"
        )
    pos_is_major = n_pos >= n_neg
    if pos_is_major:
        return np.where(pos, h.gamma, a_min)
    return np.where(pos, a_min, h.gamma)


def _state_for(d: Dataset, kernel, h: Hyperparams, alpha0=None) -> DualState:
    cache = kernel if isinstance(kernel, KernelCache) else build_cache(kernel, d)
    alpha = init_alpha(d, h) if alpha0 is None else np.array(alpha0, dtype=float)
    return DualState(alpha, d.labels, cache)


def smo_train(
    d: Dataset,
    kernel: KernelSpec | KernelCache,
    h: Hyperparams,
    wss: str = SECOND_ORDER,
    audit: bool = False,
    alpha0=None,
) -> tuple[DualState, SolveReport]:
    """Run SMO until the KKT gap is within ``h.kkt_tol`` or ``h.max_iter`` pairs.

    ``kernel`` may be a spec (a cache is built) or a prebuilt cache for ``d``.
    With ``audit`` the objective decrease of every step is checked against
    ``(2/C) * ||delta alpha||^2``; failures are counted in the report.
    """
    if wss not in WSS_KINDS:
        raise DataError(f"wss must be one of {WSS_KINDS}, got {wss!r}")
    d.require_trainable()
    start = time.monotonic()
    state = _state_for(d, kernel, h, alpha0)
    cache = state.cache
    C, lam, lo_b, hi_b = h.C, h.lam, h.lower, h.upper
    a, y, m = state.alpha, state.y, state.m
    if np.any(a < lo_b) or np.any(a > hi_b):
        raise DataError("starting point violates the box bounds")
    diag = cache.diag
    second = wss == SECOND_ORDER

    def refresh():
        state.m = m_new = state.recompute_m()
        return m_new, -m_new - y * (gp_scaled(a, C) - lam), curvature(a, C)

    m, F, curv = refresh()
    up, low = index_masks(a, y, h)
    pos = y > 0
    audit_bad = 0
    audited = 0
    it = 0
    termination = "max_iter"
    while True:
        i, jm, gap = _mvp(F, up, low)
        if gap <= h.kkt_tol:
            # confirm against a freshly recomputed gradient before stopping
            m, F, curv = refresh()
            i, jm, gap = _mvp(F, up, low)
            if gap <= h.kkt_tol:
                termination = "converged"
                break
        if it >= h.max_iter:
            break
        krow_i = cache.row(i)
        j = jm
        if second:
            pick = _second_order_j(i, F, low, krow_i, diag, curv)
            if pick is not None:
                j = pick[0]
        ai, aj, yi, yj = a[i], a[j], y[i], y[j]
        line = PairLine(ai, aj, yi, yj, m[i], m[j], diag[i], diag[j], krow_i[j], C, lam)
        t_hi = step_interval(ai, aj, yi, yj, h).t_hi
        t = line.minimize(t_hi)
        new_i = min(max(ai + t * yi, lo_b), hi_b)
        new_j = min(max(aj - t * yj, lo_b), hi_b)
        di, dj = new_i - ai, new_j - aj
        if audit:
            audited += 1
            dec = -line.delta(t)
            bound = (2.0 / C) * (di * di + dj * dj)
            scale = abs(t) * (abs(m[i]) + abs(m[j]) + 2 * lam + abs(F[i]) + abs(F[j]) + C)
            if dec < bound - AUDIT_RTOL * scale:
                audit_bad += 1
                log.warning("sufficient decrease failed at iteration %d: %g < %g", it, dec, bound)
        a[i], a[j] = new_i, new_j
        dm = (di * yi) * krow_i + (dj * yj) * cache.row(j)
        m += dm
        F -= dm
        for k in (i, j):
            F[k] = -m[k] - y[k] * (np.log(a[k]) - np.log(C - a[k]) - lam)
            curv[k] = C / (a[k] * (C - a[k]))
            below_top, above_bottom = a[k] < hi_b, a[k] > lo_b
            up[k] = (below_top and pos[k]) or (above_bottom and not pos[k])
            low[k] = (below_top and not pos[k]) or (above_bottom and pos[k])
        it += 1

    state.m = m
    state.iterations = it
    report = SolveReport(
        iterations=it,
        kkt_residual_final=gap,
        objective_final=objective(state, h),
        termination=termination,
        wall_time=time.monotonic() - start,
        wss_kind=wss,
        decrease_audit_violations=audit_bad,
        audited_iterations=audited,
    )
    if termination != "converged":
        log.warning("SMO stopped after %d iterations with KKT gap %.3g", it, gap)
    return state, report
