"""Tests for the steering kernel: matrix exponentials, Gramians, optimal
connection costs, and trajectory synthesis, each checked against an
independently coded oracle."""

import numpy as np
import pytest

from btit.dynamics import (
    TAU_MIN,
    LinearSystem,
    gramian,
    mat_exp,
    steer,
    steer_batch,
    steer_cost,
    synthesize,
)
from btit.errors import (
    PreconditionError,
    SingularGramianError,
    UnsteerablePairError,
)
from btit.presets import (
    make_double_integrator,
    make_quadrotor,
    make_single_integrator,
)


# ---------------------------------------------------------------------------
# Oracles, coded independently of the library internals.


def taylor_expm(a, t, terms=60):
    """Scaled-and-squared truncated Taylor series for exp(a * t)."""
    m = np.asarray(a, dtype=float) * float(t)
    norm = np.linalg.norm(m, 1)
    squarings = 0
    while norm > 0.5:
        m = m / 2.0
        norm = norm / 2.0
        squarings += 1
    out = np.eye(m.shape[0])
    term = np.eye(m.shape[0])
    for i in range(1, terms):
        term = term @ m / i
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def gramian_rk4(a, b, r, t, steps=4000):
    """Fixed-step RK4 on dG/dt = A G + G A^T + B R^-1 B^T from G(0) = 0."""
    m = b @ np.linalg.solve(r, b.T)

    def rhs(g):
        return a @ g + g @ a.T + m

    g = np.zeros_like(a)
    h = t / steps
    for _ in range(steps):
        k1 = rhs(g)
        k2 = rhs(g + 0.5 * h * k1)
        k3 = rhs(g + 0.5 * h * k2)
        k4 = rhs(g + h * k3)
        g = g + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return g


def di_gram(t, dims):
    """Double-integrator Gramian [[t^3/3 I, t^2/2 I], [t^2/2 I, t I]]."""
    eye = np.eye(dims)
    return np.block(
        [[t**3 / 3.0 * eye, t**2 / 2.0 * eye], [t**2 / 2.0 * eye, t * eye]]
    )


def di_free(x0, t, dims):
    """Free double-integrator evolution [p + t v, v]."""
    return np.concatenate([x0[:dims] + t * x0[dims:], x0[dims:]])


def di_cost(x0, x1, t, dims):
    """Closed-form double-integrator connection cost at duration t."""
    resid = x1 - di_free(x0, t, dims)
    return t + resid @ np.linalg.solve(di_gram(t, dims), resid)


def di_cost_grid(x0, x1, taus, dims):
    """di_cost vectorized over a duration grid."""
    eye = np.eye(dims)
    out = np.empty(len(taus))
    for i, t in enumerate(taus):
        resid = x1 - di_free(x0, t, dims)
        ginv_pos = 12.0 / t**3 * eye
        # Inverse of the 2x2 block Gramian in closed form.
        inv = np.block(
            [
                [12.0 / t**3 * eye, -6.0 / t**2 * eye],
                [-6.0 / t**2 * eye, 4.0 / t * eye],
            ]
        )
        del ginv_pos
        out[i] = t + resid @ inv @ resid
    return out


def grid_minimum(cost_of, lo, hi, points=4001, zooms=3):
    """Dense-grid minimization with repeated local zoom around the best node."""
    best_t, best_c = None, np.inf
    for _ in range(zooms):
        taus = np.linspace(lo, hi, points)
        costs = cost_of(taus)
        i = int(np.argmin(costs))
        if costs[i] < best_c:
            best_c, best_t = float(costs[i]), float(taus[i])
        step = (hi - lo) / (points - 1)
        lo = max(TAU_MIN, taus[max(i - 1, 0)])
        hi = min(hi, taus[min(i + 1, points - 1)] + step)
    return best_t, best_c


def zoh_cost(a, b, c, r, x0, x1, tau, steps):
    """Discrete-time transcription with zero-order-hold controls.

    Minimizes sum dt u_k^T R u_k subject to hitting x1 after `steps` exact
    ZOH updates, giving cost tau + dt r^T W^-1 r. Piecewise-constant controls
    are a strict subset of the continuous problem's controls, so this value
    upper-bounds the continuous optimum and converges to it as steps grow.
    """
    n = a.shape[0]
    dt = tau / steps
    ad = taylor_expm(a, dt)
    # Integral of e^{A s} over one step via the augmented-matrix trick.
    aug = np.zeros((2 * n, 2 * n))
    aug[:n, :n] = a
    aug[:n, n:] = np.eye(n)
    eaug = taylor_expm(aug, dt)
    eint = eaug[:n, n:]
    bd = eint @ b
    cd = eint @ c
    rinv = np.linalg.inv(r)

    powers = [np.eye(n)]
    for _ in range(steps):
        powers.append(ad @ powers[-1])
    resid = x1 - powers[steps] @ x0
    w = np.zeros((n, n))
    for k in range(steps):
        mk = powers[steps - 1 - k] @ bd
        w += mk @ rinv @ mk.T
        resid -= powers[steps - 1 - k] @ cd
    return tau + dt * float(resid @ np.linalg.solve(w, resid))


def rk4_rollout(sys, result, steps):
    """Integrate the closed-loop dynamics under the optimal open-loop control."""
    a = sys.A
    rinv_bt = np.linalg.solve(sys.R, sys.B.T)
    tau = result.tau_star

    def control(t):
        return rinv_bt @ taylor_expm(a.T, tau - t) @ result.d_vec

    def rhs(t, x):
        return a @ x + sys.B @ control(t) + sys.c_drift

    x = result.x0.copy()
    h = tau / steps
    states = [x.copy()]
    effort = 0.0
    for k in range(steps):
        t = k * h
        u0 = control(t)
        k1 = rhs(t, x)
        k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = rhs(t + h, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        u1 = control(t + h)
        # Trapezoid on the control effort integrand.
        effort += 0.5 * h * (u0 @ sys.R @ u0 + u1 @ sys.R @ u1)
        states.append(x.copy())
    return np.array(states), tau + effort


def make_rotation_system():
    """Planar rotation dynamics, the simplest non-nilpotent test case."""
    a = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return LinearSystem(a, np.eye(2), np.zeros(2), np.eye(2))


# ---------------------------------------------------------------------------
# Matrix exponential.


def test_mat_exp_matches_series_oracle():
    rng = np.random.default_rng(7)
    mats = [
        make_double_integrator(2).A,
        make_quadrotor().A,
        np.array([[0.0, 1.0], [-1.0, 0.0]]),
        rng.normal(size=(3, 3)),
    ]
    for a in mats:
        for t in (0.0, 0.3, 1.0, 2.7):
            want = taylor_expm(a, t)
            got = mat_exp(a, t)
            assert np.allclose(got, want, rtol=1e-11, atol=1e-12)


def test_mat_exp_rejects_bad_input():
    with pytest.raises(PreconditionError):
        mat_exp(np.zeros((2, 3)), 1.0)
    with pytest.raises(PreconditionError):
        mat_exp(np.array([[np.nan, 0.0], [0.0, 0.0]]), 1.0)


# ---------------------------------------------------------------------------
# Gramians.


def test_gramian_double_integrator_closed_form():
    for dims in (1, 2):
        sys = make_double_integrator(dims)
        for t in (0.25, 1.0, 3.5):
            assert np.max(np.abs(gramian(sys, t) - di_gram(t, dims))) <= 1e-10
    # Frozen value: G(1) for the 1D double integrator.
    g1 = gramian(make_double_integrator(1), 1.0)
    assert np.max(np.abs(g1 - np.array([[1 / 3, 1 / 2], [1 / 2, 1.0]]))) <= 1e-12


def test_gramian_quadrotor_matches_ode_oracle():
    sys = make_quadrotor()
    for t in (0.5, 2.0, 5.0):
        want = gramian_rk4(sys.A, sys.B, sys.R, t)
        got = gramian(sys, t)
        scale = np.max(np.abs(want))
        assert np.max(np.abs(got - want)) <= 1e-8 * scale


def test_gramian_general_path_matches_ode_oracle():
    sys = make_rotation_system()
    for t in (0.4, 1.7, 4.0):
        want = gramian_rk4(sys.A, sys.B, sys.R, t)
        got = gramian(sys, t)
        assert np.max(np.abs(got - want)) <= 1e-8 * max(1.0, np.max(np.abs(want)))


def test_gramian_zero_and_negative_time():
    sys = make_double_integrator(1)
    assert np.all(gramian(sys, 0.0) == 0.0)
    with pytest.raises(PreconditionError):
        gramian(sys, -0.1)


def test_gramian_spd_and_monotone():
    rng = np.random.default_rng(11)
    for sys in (make_double_integrator(2), make_quadrotor(), make_rotation_system()):
        ts = np.sort(rng.uniform(0.1, 4.0, size=5))
        prev = np.zeros((sys.n, sys.n))
        for t in ts:
            g = gramian(sys, float(t))
            assert np.min(np.linalg.eigvalsh(g)) > 0.0
            # Larger windows can only add control authority.
            assert np.min(np.linalg.eigvalsh(g - prev)) >= -1e-9
            prev = g


# ---------------------------------------------------------------------------
# Connection cost and its minimizer.


def test_steer_cost_frozen_double_integrator_value():
    # (0,0) -> (1,0) in exactly tau=1: residual (1,0), G(1)^-1 = [[12,-6],[-6,4]],
    # quad = 12, so cost = 13.
    sys = make_double_integrator(1)
    got = steer_cost(sys, np.array([0.0, 0.0]), np.array([1.0, 0.0]), 1.0)
    assert abs(got - 13.0) <= 1e-9


def test_steer_cost_matches_closed_form():
    rng = np.random.default_rng(13)
    sys = make_double_integrator(2)
    for _ in range(25):
        x0 = rng.uniform(-3, 3, size=4)
        x1 = rng.uniform(-3, 3, size=4)
        t = float(rng.uniform(0.2, 6.0))
        want = di_cost(x0, x1, t, 2)
        got = steer_cost(sys, x0, x1, t)
        assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


def test_single_integrator_closed_form_optimum():
    # A = 0, B = I, R = r I gives cost(tau) = tau + r |dx|^2 / tau, minimized
    # at tau = sqrt(r) |dx| with value 2 sqrt(r) |dx|.
    sys = make_single_integrator(2, effort_weight=4.0)
    res = steer(sys, np.array([0.0, 0.0]), np.array([3.0, 4.0]), 50.0)
    assert abs(res.tau_star - 10.0) <= 1e-5
    assert abs(res.cost - 20.0) <= 1e-8


def test_steer_matches_dense_grid_double_integrator():
    rng = np.random.default_rng(17)
    sys = make_double_integrator(2)
    for _ in range(20):
        x0 = rng.uniform(-3, 3, size=4)
        x1 = rng.uniform(-3, 3, size=4)
        res = steer(sys, x0, x1, 50.0)
        _, want = grid_minimum(
            lambda taus: di_cost_grid(x0, x1, taus, 2), TAU_MIN, 50.0
        )
        assert res.cost <= want + 1e-6 * want
        assert res.cost >= want - 1e-6 * want


def test_steer_batch_equals_scalar():
    rng = np.random.default_rng(19)
    for sys in (make_double_integrator(2), make_quadrotor()):
        x0s = rng.uniform(-2, 2, size=(8, sys.n))
        x1s = rng.uniform(-2, 2, size=(8, sys.n))
        tau, cost, d_vec, ok = steer_batch(sys, x0s, x1s, 50.0)
        assert ok.all()
        for i in range(8):
            res = steer(sys, x0s[i], x1s[i], 50.0)
            assert res.tau_star == tau[i]
            assert res.cost == cost[i]
            assert np.array_equal(res.d_vec, d_vec[i])


def test_steer_respects_duration_window():
    sys = make_double_integrator(1)
    x0 = np.array([0.0, 0.0])
    x1 = np.array([1.0, 0.0])
    wide = steer(sys, x0, x1, 50.0)
    assert wide.tau_star > 0.8
    tight = steer(sys, x0, x1, 0.8)
    assert tight.tau_star <= 0.8 + 1e-12
    _, want = grid_minimum(
        lambda taus: di_cost_grid(x0, x1, taus, 1), TAU_MIN, 0.8
    )
    assert abs(tight.cost - want) <= 1e-6 * want
    assert tight.cost >= wide.cost


def test_steer_cost_upper_bounds_discrete_transcription():
    pairs = [
        (make_double_integrator(2), np.array([0.0, 0.0, 0.0, 0.0]),
         np.array([2.0, -1.0, 0.5, 0.0])),
        (make_quadrotor(), np.zeros(10),
         np.array([2.0, 1.0, -0.5, 0, 0, 0, 0, 0, 0, 0.0])),
    ]
    for sys, x0, x1 in pairs:
        res = steer(sys, x0, x1, 50.0)
        coarse = zoh_cost(sys.A, sys.B, sys.c_drift, sys.R, x0, x1,
                          res.tau_star, steps=150)
        fine = zoh_cost(sys.A, sys.B, sys.c_drift, sys.R, x0, x1,
                        res.tau_star, steps=1500)
        # Restricting to piecewise-constant controls can only cost more.
        assert fine >= res.cost - 1e-9
        assert coarse >= res.cost - 1e-9
        assert abs(fine - res.cost) <= 1e-3 * res.cost
        assert abs(fine - res.cost) <= abs(coarse - res.cost) + 1e-9


def test_steer_stationarity_at_interior_optimum():
    rng = np.random.default_rng(23)
    sys = make_double_integrator(2)
    m = sys.B @ np.linalg.solve(sys.R, sys.B.T)
    for _ in range(10):
        x0 = rng.uniform(-2, 2, size=4)
        x1 = rng.uniform(-2, 2, size=4)
        res = steer(sys, x0, x1, 50.0)
        assert TAU_MIN < res.tau_star < 50.0
        # dc/dtau = 1 - 2 (A x1 + c)^T d - d^T M d must vanish at the optimum.
        d = res.d_vec
        deriv = 1.0 - 2.0 * (sys.A @ x1 + sys.c_drift) @ d - d @ m @ d
        assert abs(deriv) <= 1e-4 * (1.0 + abs(res.cost))


def test_steer_analytic_derivative_matches_finite_difference():
    sys = make_double_integrator(2)
    rng = np.random.default_rng(29)
    m = sys.B @ np.linalg.solve(sys.R, sys.B.T)
    for _ in range(5):
        x0 = rng.uniform(-2, 2, size=4)
        x1 = rng.uniform(-2, 2, size=4)
        t = float(rng.uniform(0.5, 4.0))
        resid = x1 - di_free(x0, t, 2)
        d = np.linalg.solve(di_gram(t, 2), resid)
        analytic = 1.0 - 2.0 * (sys.A @ x1) @ d - d @ m @ d
        h = 1e-6 * t
        fd = (steer_cost(sys, x0, x1, t + h) - steer_cost(sys, x0, x1, t - h)) / (
            2.0 * h
        )
        assert abs(analytic - fd) <= 1e-4 * (1.0 + abs(analytic))


def test_steer_triangle_inequality():
    rng = np.random.default_rng(31)
    sys = make_double_integrator(2)
    for _ in range(15):
        xs = rng.uniform(-2, 2, size=(3, 4))
        leg1 = steer(sys, xs[0], xs[1], 50.0)
        leg2 = steer(sys, xs[1], xs[2], 50.0)
        if leg1.tau_star + leg2.tau_star > 50.0:
            continue
        direct = steer(sys, xs[0], xs[2], 50.0)
        assert direct.cost <= leg1.cost + leg2.cost + 1e-9


def test_steer_with_drift_term():
    # Vertical double integrator under gravity: c = (0, -9.81).
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    b = np.array([[0.0], [1.0]])
    sys = LinearSystem(a, b, np.array([0.0, -9.81]), np.eye(1))
    # Frozen free evolution from rest: p(t) = -4.905 t^2, v(t) = -9.81 t.
    from btit.dynamics import drift

    x = drift(sys, np.array([0.0, 0.0]), 2.0)
    assert np.max(np.abs(x - np.array([-19.62, -19.62]))) <= 1e-10
    res = steer(sys, np.array([0.0, 0.0]), np.array([1.0, 0.0]), 50.0)
    states, rollout_cost = rk4_rollout(sys, res, 2000)
    assert np.max(np.abs(states[-1] - np.array([1.0, 0.0]))) <= 1e-7
    assert abs(rollout_cost - res.cost) <= 1e-5 * res.cost


def test_free_evolution_frozen_value():
    from btit.dynamics import drift

    sys = make_double_integrator(1)
    x = drift(sys, np.array([0.0, 1.0]), 2.0)
    assert np.max(np.abs(x - np.array([2.0, 1.0]))) <= 1e-12


# ---------------------------------------------------------------------------
# Trajectory synthesis.


def test_synthesize_shapes_and_endpoints():
    rng = np.random.default_rng(37)
    for sys in (make_double_integrator(2), make_quadrotor(), make_rotation_system()):
        x0 = rng.uniform(-1, 1, size=sys.n)
        x1 = rng.uniform(-1, 1, size=sys.n)
        res = steer(sys, x0, x1, 50.0)
        traj = synthesize(sys, res, 16)
        assert traj.states.shape == (17, sys.n)
        assert traj.times[0] == 0.0
        assert abs(traj.times[-1] - res.tau_star) <= 1e-15 * res.tau_star
        assert np.max(np.abs(traj.states[0] - x0)) <= 1e-9
        assert np.max(np.abs(traj.states[-1] - x1)) <= 1e-9
        steps = np.diff(traj.times)
        assert np.max(np.abs(steps - steps[0])) <= 1e-12


def test_synthesize_matches_rk4_rollout():
    rng = np.random.default_rng(41)
    for sys in (make_double_integrator(2), make_quadrotor()):
        x0 = rng.uniform(-1, 1, size=sys.n)
        x1 = rng.uniform(-1, 1, size=sys.n)
        res = steer(sys, x0, x1, 50.0)
        segments = 20
        rollout_steps = 2000
        states, rollout_cost = rk4_rollout(sys, res, rollout_steps)
        traj = synthesize(sys, res, segments)
        stride = rollout_steps // segments
        for i in range(segments + 1):
            assert np.max(np.abs(traj.states[i] - states[i * stride])) <= 1e-6
        assert abs(rollout_cost - res.cost) <= 1e-5 * res.cost


def test_synthesize_single_segment():
    sys = make_double_integrator(1)
    res = steer(sys, np.array([0.0, 0.0]), np.array([1.0, 0.0]), 50.0)
    traj = synthesize(sys, res, 1)
    assert traj.states.shape == (2, 2)
    with pytest.raises(PreconditionError):
        synthesize(sys, res, 0)


# ---------------------------------------------------------------------------
# Degenerate and invalid inputs.


def test_uncontrollable_pair_raises():
    a = np.zeros((2, 2))
    b = np.array([[1.0], [0.0]])
    sys = LinearSystem(a, b, np.zeros(2), np.eye(1))
    with pytest.raises(SingularGramianError):
        steer_cost(sys, np.zeros(2), np.array([0.0, 1.0]), 1.0)
    with pytest.raises(UnsteerablePairError):
        steer(sys, np.zeros(2), np.array([0.0, 1.0]), 50.0)
    # The Gramian is singular everywhere, so even targets inside the
    # controllable subspace are rejected rather than silently mis-solved.
    with pytest.raises(UnsteerablePairError):
        steer(sys, np.zeros(2), np.array([1.0, 0.0]), 50.0)


def test_system_validation():
    with pytest.raises(PreconditionError):
        LinearSystem(np.zeros((2, 3)), np.eye(2), np.zeros(2), np.eye(2))
    with pytest.raises(PreconditionError):
        LinearSystem(np.zeros((2, 2)), np.zeros((3, 1)), np.zeros(2), np.eye(1))
    with pytest.raises(PreconditionError):
        LinearSystem(np.zeros((2, 2)), np.eye(2), np.zeros(3), np.eye(2))
    with pytest.raises(PreconditionError):
        # R must be symmetric positive definite.
        LinearSystem(np.zeros((2, 2)), np.eye(2), np.zeros(2), -np.eye(2))
    with pytest.raises(PreconditionError):
        LinearSystem(
            np.array([[0.0, np.inf], [0.0, 0.0]]), np.eye(2), np.zeros(2), np.eye(2)
        )


def test_steer_validation():
    sys = make_double_integrator(1)
    with pytest.raises(PreconditionError):
        steer(sys, np.zeros(3), np.zeros(2), 50.0)
    with pytest.raises(PreconditionError):
        steer(sys, np.zeros(2), np.zeros(2), TAU_MIN / 2.0)
    with pytest.raises(PreconditionError):
        steer_cost(sys, np.zeros(2), np.zeros(2), -1.0)
    with pytest.raises(PreconditionError):
        steer_batch(sys, np.zeros((2, 2)), np.zeros((2, 2)), np.array([50.0, np.nan]))
