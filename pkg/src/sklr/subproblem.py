"""Exact solution of the two-variable SMO subproblem along its feasible line.

Moving along ``a_i + t y_i``, ``a_j - t y_j`` keeps ``sum a y`` fixed; the
restriction ``phi(t)`` of the objective is strictly convex with
``phi'' >= 8 / C``, so a bracketed Newton iteration finds the minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dual import DualState, Hyperparams
from .errors import SolverContractError

NEWTON_TOL = 1e-10
MAX_NEWTON = 100


@dataclass(frozen=True)
class StepInterval:
    t_lo: float
    t_hi: float


def _side(a: float, sign: float, lo: float, hi: float) -> tuple[float, float]:
    # lo <= a + sign * t <= hi
    if sign > 0:
        return lo - a, hi - a
    return a - hi, a - lo


def step_interval(alpha_i, alpha_j, y_i, y_j, h: Hyperparams) -> StepInterval:
    lo1, hi1 = _side(alpha_i, y_i, h.lower, h.upper)
    lo2, hi2 = _side(alpha_j, -y_j, h.lower, h.upper)
    return StepInterval(max(lo1, lo2, -math.inf), min(hi1, hi2))


def _log_ratio(a: float, C: float) -> float:
    if not 0.0 < a < C:
        raise SolverContractError(f"alpha={a!r} left the open interval (0, {C})")
    return math.log(a) - math.log(C - a)


def _xlogx_step(x: float, e: float) -> float:
    # (x + e) log(x + e) - x log x without cancelling the leading terms
    return x * math.log1p(e / x) + e * math.log(x + e)


def entropy_step(a: float, da: float, C: float) -> float:
    """``C * (G((a + da) / C) - G(a / C))`` computed without cancellation."""
    d, e = a / C, da / C
    u = 1.0 - d
    return C * (_xlogx_step(d, e) + _xlogx_step(u, -e))


class PairLine:
    """The scalar function phi along the feasible line of the pair (i, j)."""

    __slots__ = ("ai", "aj", "yi", "yj", "eta", "c0", "C", "lam", "mi", "mj", "steps")

    def __init__(self, ai, aj, yi, yj, mi, mj, kii, kjj, kij, C, lam):
        self.ai, self.aj, self.yi, self.yj = ai, aj, yi, yj
        self.mi, self.mj = mi, mj
        self.eta = kii + kjj - 2.0 * kij
        self.c0 = mi - mj - lam * (yi - yj)
        self.C, self.lam = C, lam
        self.steps = 0

    @classmethod
    def of(cls, state: DualState, h: Hyperparams, i: int, j: int) -> "PairLine":
        K = state.cache
        return cls(
            float(state.alpha[i]), float(state.alpha[j]),
            float(state.y[i]), float(state.y[j]),
            float(state.m[i]), float(state.m[j]),
            float(K.diag[i]), float(K.diag[j]), K.entry(i, j),
            h.C, h.lam,
        )

    def d1(self, t: float) -> float:
        C = self.C
        return (
            self.c0
            + t * self.eta
            + self.yi * _log_ratio(self.ai + t * self.yi, C)
            - self.yj * _log_ratio(self.aj - t * self.yj, C)
        )

    def d2(self, t: float) -> float:
        C = self.C
        a = self.ai + t * self.yi
        b = self.aj - t * self.yj
        if not (0.0 < a < C and 0.0 < b < C):
            raise SolverContractError("step leaves the open box (0, C)")
        return self.eta + C / (a * (C - a)) + C / (b * (C - b))

    def delta(self, t: float) -> float:
        """``phi(t) - phi(0)``."""
        quad = t * (self.mi - self.mj) + 0.5 * t * t * self.eta
        ent = entropy_step(self.ai, t * self.yi, self.C) + entropy_step(self.aj, -t * self.yj, self.C)
        return quad + ent - self.lam * t * (self.yi - self.yj)

    def minimize(self, t_hi: float) -> float:
        g0 = self.d1(0.0)
        if not g0 < 0.0:
            raise SolverContractError(
                f"pair is not violating: phi'(0) = {g0!r} must be negative"
            )
        if self.d1(t_hi) <= 0.0:
            return t_hi
        lo, hi = 0.0, t_hi
        t = -g0 / self.d2(0.0)
        if not lo < t < hi:
            t = 0.5 * (lo + hi)
        for self.steps in range(1, MAX_NEWTON + 1):
            g = self.d1(t)
            if abs(g) <= NEWTON_TOL:
                break
            if g < 0.0:
                lo = t
            else:
                hi = t
            if hi - lo <= 4e-16 * hi:
                break
            tn = t - g / self.d2(t)
            t = tn if lo < tn < hi else 0.5 * (lo + hi)
        return t


def phi_derivs(state: DualState, h: Hyperparams, i: int, j: int, t: float) -> tuple[float, float]:
    line = PairLine.of(state, h, i, j)
    return line.d1(t), line.d2(t)


def phi_delta(state: DualState, h: Hyperparams, i: int, j: int, t: float) -> float:
    return PairLine.of(state, h, i, j).delta(t)


def solve_1d(state: DualState, h: Hyperparams, i: int, j: int) -> float:
    """Minimizing steplength for the pair (i, j) over its feasible interval.

    Raises
    ------
    SolverContractError
        If (i, j) is not a violating pair, i.e. ``phi'(0) >= 0``.
    """
    iv = step_interval(state.alpha[i], state.alpha[j], state.y[i], state.y[j], h)
    return PairLine.of(state, h, i, j).minimize(iv.t_hi)
