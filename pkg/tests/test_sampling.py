"""Connection constants, uniform and informed rejection sampling, and the
direct spheroid sampler."""

import math

import numpy as np
import pytest

from btit.errors import InfeasibleSpaceError, PreconditionError
from btit.geometry import Scenario
from btit.sampling import (
    ATTEMPTS_PER_ACCEPT,
    BatchSampler,
    SpheroidSampler,
    batch_stream,
    connection_radius,
    default_gamma,
    default_knn_count,
    sample_uniform,
)

# Frozen radius values, computed independently at 50-digit precision:
#   gamma=1, q=e, d=1:      (ln(e)/e)^1 = 1/e
#   gamma=2.5, q=100, d=4:  2.5 * (ln(100)/100)^(1/4)
RADIUS_AT_E = 0.36787944117144233
RADIUS_100_4D = 1.1581143149235493


def si2d_box(start=(1.0, 2.0), goal=(3.0, 2.0), obstacles=((), ())):
    lo, hi = obstacles
    return Scenario(
        system="si2d",
        lower=np.array([0.0, 0.0]),
        upper=np.array([4.0, 4.0]),
        position_dims=(0, 1),
        obstacles_lo=np.array(lo, dtype=float).reshape(-1, 2),
        obstacles_hi=np.array(hi, dtype=float).reshape(-1, 2),
        start=np.array(start, dtype=float),
        goal=np.array(goal, dtype=float),
    )


def analytic_estimate(scn):
    """Exact steering estimates for the unit-effort single integrator:
    cost(x -> y) = 2 |y - x|."""

    def est(states):
        d0 = 2.0 * np.linalg.norm(states - scn.start[None, :], axis=1)
        d1 = 2.0 * np.linalg.norm(states - scn.goal[None, :], axis=1)
        return np.stack([d0, d1])

    return est


def test_connection_radius_frozen_values():
    assert connection_radius(math.e, 1, 1.0) == pytest.approx(RADIUS_AT_E, abs=1e-15)
    assert connection_radius(100, 4, 2.5) == pytest.approx(RADIUS_100_4D, abs=1e-15)
    assert default_gamma(2) == pytest.approx(2.0 * math.sqrt(1.5), abs=1e-15)


def test_connection_radius_shrinks_with_population():
    values = [connection_radius(q, 2, 2.0) for q in (3, 10, 100, 1000, 10_000)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] > 0.0


def test_connection_constants_reject_bad_arguments():
    with pytest.raises(PreconditionError):
        connection_radius(1.99, 2, 2.0)
    with pytest.raises(PreconditionError):
        connection_radius(10, 0, 2.0)
    with pytest.raises(PreconditionError):
        connection_radius(10, 2, 0.0)
    with pytest.raises(PreconditionError):
        default_gamma(0)
    with pytest.raises(PreconditionError):
        default_knn_count(1.5)
    with pytest.raises(PreconditionError):
        default_knn_count(10, k_gamma=0.0)


def test_knn_count_value():
    assert default_knn_count(100) == math.ceil(2.0 * math.log(100))
    assert default_knn_count(100, k_gamma=3.0) == math.ceil(3.0 * math.log(100))


def test_batch_streams_reproducible_and_independent():
    a = batch_stream(42, 3).random(8)
    b = batch_stream(42, 3).random(8)
    c = batch_stream(42, 4).random(8)
    d = batch_stream(43, 3).random(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
    with pytest.raises(PreconditionError):
        batch_stream(42, -1)


def test_uniform_batch_mean_and_bounds():
    scn = si2d_box()
    sampler = BatchSampler(scn, seed=11)
    batch = sampler.draw(0, 100_000)
    assert batch.states.shape == (100_000, 2)
    assert batch.h_parts is None
    assert not batch.shrunk
    assert np.all(batch.states >= 0.0) and np.all(batch.states <= 4.0)
    # Uniform over [0, 4]^2: per-axis mean 2.0, Monte-Carlo std ~ 0.0037.
    assert np.allclose(batch.states.mean(axis=0), 2.0, atol=0.04)


def test_draws_avoid_obstacles():
    scn = si2d_box(obstacles=(((1.5, 1.0),), ((2.5, 3.0),)))
    sampler = BatchSampler(scn, seed=5)
    states = sampler.draw(2, 3000).states
    assert np.all(scn.states_valid(states))
    inside = (
        (states[:, 0] >= 1.5)
        & (states[:, 0] <= 2.5)
        & (states[:, 1] >= 1.0)
        & (states[:, 1] <= 3.0)
    )
    assert not inside.any()


def test_sample_uniform_single_state():
    scn = si2d_box(obstacles=(((1.5, 1.0),), ((2.5, 3.0),)))
    rng = np.random.default_rng(9)
    for _ in range(50):
        state = sample_uniform(scn, rng)
        assert scn.state_valid(state)


def test_sample_uniform_gives_up_on_sliver():
    # Valid region is a 4e-13-wide strip: a fixed seed never hits it within
    # the consecutive-rejection limit.
    scn = si2d_box(
        start=(2e-13, 2.0),
        goal=(3e-13, 2.0),
        obstacles=(((4e-13, 0.0),), ((4.0, 4.0),)),
    )
    rng = np.random.default_rng(0)
    with pytest.raises(InfeasibleSpaceError):
        sample_uniform(scn, rng)


def test_informed_batches_reproducible():
    scn = si2d_box()
    sampler = BatchSampler(scn, seed=21, estimate=analytic_estimate(scn))
    one = sampler.draw(1, 500, c_best=6.0)
    two = sampler.draw(1, 500, c_best=6.0)
    assert np.array_equal(one.states, two.states)
    assert one.attempts == two.attempts
    assert one.batch_index == 1
    assert one.h_parts.shape == (2, 500)


def test_informed_filter_strict_and_focusing():
    scn = si2d_box()
    est = analytic_estimate(scn)
    sampler = BatchSampler(scn, seed=3, estimate=est)
    wide = sampler.draw(0, 2000, c_best=8.0)
    tight = sampler.draw(0, 2000, c_best=5.0)
    for batch, bound in ((wide, 8.0), (tight, 5.0)):
        sums = est(batch.states).sum(axis=0)
        assert np.all(sums < bound)
        assert np.allclose(est(batch.states), batch.h_parts)
    # A tighter bound accepts a subset of draws, so it needs more attempts.
    assert tight.attempts > wide.attempts


def test_informed_acceptance_matches_ellipse_area():
    # Unit-effort single integrator: the informed set for incumbent cost 6
    # is the ellipse |x-s| + |x-g| < 3 with foci 2 apart, i.e. semi-axes
    # a = 1.5 and b = sqrt(1.25), fully inside the 4 x 4 box.
    scn = si2d_box()
    est = analytic_estimate(scn)
    a = 1.5
    b = math.sqrt(a * a - 1.0)
    expected = math.pi * a * b / 16.0
    draws = batch_stream(1234, 0).random((100_000, 2)) * 4.0
    rate = float(np.mean(est(draws).sum(axis=0) < 6.0))
    assert rate == pytest.approx(expected, rel=0.05)

    # The sampler's own accept-per-attempt ratio agrees.
    sampler = BatchSampler(scn, seed=77, estimate=est)
    batch = sampler.draw(0, 40_000, c_best=6.0)
    assert not batch.shrunk
    assert batch.states.shape[0] / batch.attempts == pytest.approx(expected, rel=0.05)


def test_unreachable_bound_returns_partial_batch():
    scn = si2d_box()
    sampler = BatchSampler(scn, seed=2, estimate=analytic_estimate(scn))
    # Any state has estimate sum >= 2 * 2 * |s-g| / 2 = 4 > 1.
    batch = sampler.draw(0, 5, c_best=1.0)
    assert batch.states.shape == (0, 2)
    assert batch.shrunk
    assert batch.attempts == ATTEMPTS_PER_ACCEPT * 5


def test_draw_validates_count():
    sampler = BatchSampler(si2d_box(), seed=0)
    with pytest.raises(PreconditionError):
        sampler.draw(0, 0)


def test_spheroid_sampler_respects_bound_and_obstacles():
    scn = si2d_box(obstacles=(((1.8, 1.8),), ((2.2, 2.2),)))
    sampler = SpheroidSampler(scn, seed=13)
    batch = sampler.draw(0, 4000, c_best=6.0)
    assert batch.states.shape == (4000, 2)
    d = np.linalg.norm(batch.states - scn.start[None, :], axis=1)
    d += np.linalg.norm(batch.states - scn.goal[None, :], axis=1)
    assert np.all(d < 6.0)
    assert np.all(scn.states_valid(batch.states))
    # Points land on both sides of the focal axis midpoint.
    assert (batch.states[:, 0] < 2.0).any() and (batch.states[:, 0] > 2.0).any()
    again = sampler.draw(0, 4000, c_best=6.0)
    assert np.array_equal(batch.states, again.states)


def test_spheroid_sampler_uniform_until_incumbent():
    scn = si2d_box()
    direct = SpheroidSampler(scn, seed=4).draw(0, 1000)
    plain = BatchSampler(scn, seed=4).draw(0, 1000)
    assert np.array_equal(direct.states, plain.states)


def test_spheroid_sampler_empty_when_bound_too_small():
    scn = si2d_box()
    batch = SpheroidSampler(scn, seed=4).draw(0, 10, c_best=1.5)
    assert batch.states.shape[0] == 0
    assert batch.shrunk
