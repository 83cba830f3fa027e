import numpy as np
import pytest
from hypothesis import given, strategies as st

from sklr.dual import Hyperparams, gradient_component
from sklr.errors import SolverContractError
from sklr.subproblem import PairLine, entropy_step, phi_delta, phi_derivs, solve_1d, step_interval
from sklr.wss import select_mvp

from conftest import identity_state, random_state


def test_step_interval_same_labels_centre():
    C = 2.0
    h = Hyperparams(C=C)
    iv = step_interval(C / 2, C / 2, 1.0, 1.0, h)
    assert iv.t_lo == pytest.approx(-(C / 2 - h.gamma), rel=1e-15)
    assert iv.t_hi == pytest.approx(C / 2 - h.gamma, rel=1e-15)


def test_step_interval_lower_bound_side():
    h = Hyperparams(C=1.0)
    iv = step_interval(h.gamma, 0.5, 1.0, 1.0, h)
    assert iv.t_lo == 0.0 and iv.t_hi > 0


def test_step_interval_opposite_labels_move_together():
    h = Hyperparams(C=1.0)
    iv = step_interval(0.3, 0.6, 1.0, -1.0, h)
    # both variables become a + t
    assert iv.t_hi == pytest.approx(min(1 - h.gamma - 0.3, 1 - h.gamma - 0.6))
    assert iv.t_lo == pytest.approx(max(h.gamma - 0.3, h.gamma - 0.6))


@given(st.floats(1e-5, 1 - 1e-5), st.floats(1e-5, 1 - 1e-5), st.sampled_from([-1.0, 1.0]),
       st.sampled_from([-1.0, 1.0]))
def test_step_interval_contains_zero(ai, aj, yi, yj):
    iv = step_interval(ai, aj, yi, yj, Hyperparams(C=1.0))
    assert iv.t_lo <= 0.0 <= iv.t_hi


def test_entropy_step_matches_direct_difference():
    from sklr.dual import entropy_G

    for a, da, C in [(0.3, 0.01, 1.0), (5.0, -1.0, 10.0), (1e-4, 1e-6, 1.0)]:
        direct = C * (entropy_G((a + da) / C) - entropy_G(a / C))
        assert entropy_step(a, da, C) == pytest.approx(direct, rel=1e-9, abs=1e-15)


def test_symmetric_pair_has_zero_slope():
    h = Hyperparams(C=2.0)
    s = identity_state([1.0, 1.0], [1.0, -1.0])
    s.m = np.zeros(2)
    d1, d2 = phi_derivs(s, h, 0, 1, 0.0)
    assert d1 == 0.0
    assert d2 >= 8 / h.C


def _random_pair(rng, C):
    s, h = random_state(rng, n=int(rng.integers(3, 12)), C=C)
    i, j = rng.choice(s.n, size=2, replace=False)
    return s, h, int(i), int(j)


def test_phi_second_derivative_lower_bound(rng):
    for _ in range(1000):
        C = float(rng.choice([0.1, 1.0, 10.0]))
        s, h, i, j = _random_pair(rng, C)
        iv = step_interval(s.alpha[i], s.alpha[j], s.y[i], s.y[j], h)
        t = rng.uniform(iv.t_lo, iv.t_hi)
        assert phi_derivs(s, h, i, j, t)[1] >= 8.0 / C


def test_phi_slope_at_zero_is_minus_violation(rng):
    for _ in range(50):
        s, h, i, j = _random_pair(rng, 1.0)
        v = -s.y[i] * gradient_component(s, h, i) + s.y[j] * gradient_component(s, h, j)
        assert phi_derivs(s, h, i, j, 0.0)[0] == pytest.approx(-v, rel=1e-10, abs=1e-12)


def test_phi_derivatives_by_central_differences(rng):
    eps = 1e-6
    for _ in range(50):
        s, h, i, j = _random_pair(rng, 1.0)
        iv = step_interval(s.alpha[i], s.alpha[j], s.y[i], s.y[j], h)
        t = rng.uniform(iv.t_lo + 2 * eps, iv.t_hi - 2 * eps)
        d1, d2 = phi_derivs(s, h, i, j, t)
        fd1 = (phi_delta(s, h, i, j, t + eps) - phi_delta(s, h, i, j, t - eps)) / (2 * eps)
        fd2 = (phi_derivs(s, h, i, j, t + eps)[0] - phi_derivs(s, h, i, j, t - eps)[0]) / (2 * eps)
        assert abs(d1 - fd1) <= 1e-5 * max(1.0, abs(d1))
        assert abs(d2 - fd2) <= 1e-5 * max(1.0, abs(d2))


def test_phi_outside_open_box_is_error():
    h = Hyperparams(C=1.0)
    s = identity_state([0.5, 0.5], [1.0, 1.0])
    with pytest.raises(SolverContractError):
        phi_derivs(s, h, 0, 1, 0.6)


def test_solve_1d_matches_dense_grid(rng):
    for _ in range(30):
        s, h = random_state(rng, n=8, C=1.0)
        ch = select_mvp(s, h)
        if ch is None:
            continue
        i, j = ch.i, ch.j
        t = solve_1d(s, h, i, j)
        iv = step_interval(s.alpha[i], s.alpha[j], s.y[i], s.y[j], h)
        grid = np.linspace(0.0, iv.t_hi, 20001)
        vals = np.array([phi_delta(s, h, i, j, g) for g in grid])
        tg = grid[int(np.argmin(vals))]
        assert abs(t - tg) <= 2 * (grid[1] - grid[0])
        assert phi_delta(s, h, i, j, t) <= vals.min() + 1e-12


def test_newton_guess_close_in_quadratic_regime():
    # large C keeps the entropy curvature small next to the kernel curvature
    C = 1000.0
    line = PairLine(400.0, 400.0, 1.0, -1.0, -3.0, 1.0, 1.0, 1.0, -0.9, C, 0.0)
    g0, c0 = line.d1(0.0), line.d2(0.0)
    t = line.minimize(599.0)
    guess = -g0 / c0
    assert abs(line.d2(t) - c0) / c0 < 0.1
    assert abs(t - guess) <= 0.2 * abs(t)


def test_boundary_active_returns_t_hi():
    h = Hyperparams(C=1.0)
    a_i = h.upper - 1e-6
    s = identity_state([a_i, 0.5], [1.0, -1.0])
    s.m = np.array([-50.0, 50.0])  # strong pull towards larger t
    iv = step_interval(s.alpha[0], s.alpha[1], 1.0, -1.0, h)
    assert iv.t_hi == pytest.approx(1e-6, rel=1e-6)
    assert solve_1d(s, h, 0, 1) == iv.t_hi


def test_non_violating_pair_is_contract_error():
    h = Hyperparams(C=2.0)
    s = identity_state([1.0, 1.0], [1.0, -1.0])
    s.m = np.zeros(2)
    with pytest.raises(SolverContractError):
        solve_1d(s, h, 0, 1)


@given(st.integers(0, 2**31), st.sampled_from([0.1, 1.0, 10.0]), st.floats(0.0, 1.0))
def test_solve_1d_sufficient_decrease_and_feasibility(seed, C, lam_frac):
    rng = np.random.default_rng(seed)
    s, h = random_state(rng, n=6, C=C)
    h = h.with_(lam=lam_frac * C)
    ch = select_mvp(s, h)
    if ch is None:
        return
    i, j = ch.i, ch.j
    line = PairLine.of(s, h, i, j)
    iv = step_interval(s.alpha[i], s.alpha[j], s.y[i], s.y[j], h)
    t = line.minimize(iv.t_hi)
    assert 0 < t <= iv.t_hi
    assert line.steps <= 60
    assert -line.delta(t) >= (4.0 / C) * t * t * (1 - 1e-9)
    if t < iv.t_hi:
        assert abs(line.d1(t)) <= 1e-8 * max(1.0, abs(line.d1(0.0)))
    ai, aj = s.alpha[i] + t * s.y[i], s.alpha[j] - t * s.y[j]
    assert h.lower <= ai <= h.upper and h.lower <= aj <= h.upper
    before = s.alpha[i] * s.y[i] + s.alpha[j] * s.y[j]
    assert abs((ai * s.y[i] + aj * s.y[j]) - before) <= 1e-14 * max(1.0, C)
