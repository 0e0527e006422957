"""Batch state sampling: uniform rejection sampling over the scenario box,
informed rejection sampling against an additive cost bound, direct
prolate-hyperspheroid sampling for the Euclidean-heuristic configuration,
and the random-geometric-graph connection constants."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleSpaceError, PreconditionError
from .geometry import Scenario

# Uniform sampling aborts after this many consecutive invalid draws.
MAX_CONSECUTIVE_REJECTS = 1_000_000
# Informed batches stop early once raw draws exceed this multiple of the
# requested batch size; the batch is then returned partial with a warning.
ATTEMPTS_PER_ACCEPT = 1000
_CHUNK_CAP = 4096


def default_gamma(dim: int) -> float:
    """Connection-radius scale 2 * (1 + 1/d)^(1/d) for dimension d."""
    if dim < 1:
        raise PreconditionError("dim must be at least 1")
    return 2.0 * (1.0 + 1.0 / dim) ** (1.0 / dim)


def connection_radius(q: float, dim: int, gamma: float) -> float:
    """Shrinking connection radius gamma * (log(q) / q)^(1/d) for a
    population of q nodes; requires q >= 2 so the radius is finite and
    positive."""
    if dim < 1:
        raise PreconditionError("dim must be at least 1")
    if gamma <= 0.0:
        raise PreconditionError("gamma must be positive")
    if q < 2:
        raise PreconditionError("population must be at least 2")
    return gamma * (math.log(q) / q) ** (1.0 / dim)


def default_knn_count(q: float, k_gamma: float = 2.0) -> int:
    """Neighbor count ceil(k_gamma * log(q)) for the k-nearest mode."""
    if k_gamma <= 0.0:
        raise PreconditionError("k_gamma must be positive")
    if q < 2:
        raise PreconditionError("population must be at least 2")
    return int(math.ceil(k_gamma * math.log(q)))


@dataclass(frozen=True)
class SampleBatch:
    """One batch of accepted states.

    attempts counts every raw draw spent, including rejected ones. shrunk is
    set when the draw budget ran out before the batch filled, which signals
    that the informed set has become small relative to the sampled box.
    h_parts carries the a-priori estimates (cost-to-come row 0, cost-to-go
    row 1) for the accepted states when an estimate function was in use.
    """

    states: np.ndarray
    batch_index: int
    attempts: int
    shrunk: bool = False
    h_parts: np.ndarray | None = None


def batch_stream(seed: int, batch_index: int) -> np.random.Generator:
    """Independent generator for one batch, reproducible from the trial seed."""
    if batch_index < 0:
        raise PreconditionError("batch_index must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(batch_index,)))


def _uniform_chunk(scenario: Scenario, rng: np.random.Generator, k: int) -> np.ndarray:
    span = scenario.upper - scenario.lower
    return scenario.lower[None, :] + rng.random((k, scenario.n)) * span[None, :]


def sample_uniform(scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    """One uniformly distributed collision-free state from the scenario box."""
    consecutive = 0
    while True:
        chunk = _uniform_chunk(scenario, rng, 64)
        ok = scenario.states_valid(chunk)
        hits = np.flatnonzero(ok)
        if hits.size:
            return chunk[hits[0]]
        consecutive += chunk.shape[0]
        if consecutive >= MAX_CONSECUTIVE_REJECTS:
            raise InfeasibleSpaceError(
                "no collision-free state found after "
                f"{consecutive} consecutive draws"
            )


class BatchSampler:
    """Draws per-batch sample sets for one planning trial.

    estimate, when given, maps a (K, n) state block to a (2, K) array of
    a-priori cost estimates (row 0 from the start, row 1 to the goal); their
    sum filters draws against the incumbent cost. Batches are reproducible:
    batch i always uses the generator batch_stream(seed, i) regardless of
    how earlier batches consumed randomness.
    """

    def __init__(self, scenario: Scenario, seed: int, estimate=None):
        self.scenario = scenario
        self.seed = int(seed)
        self.estimate = estimate

    def draw(self, batch_index: int, count: int, c_best: float = np.inf) -> SampleBatch:
        """Up to count valid states with a-priori estimate sum strictly below
        c_best; stops short with shrunk=True once the attempt budget
        ATTEMPTS_PER_ACCEPT * count is spent."""
        if count < 1:
            raise PreconditionError("count must be at least 1")
        rng = batch_stream(self.seed, batch_index)
        informed = self.estimate is not None and np.isfinite(c_best)
        budget = ATTEMPTS_PER_ACCEPT * count
        taken: list[np.ndarray] = []
        parts: list[np.ndarray] = []
        accepted = 0
        attempts = 0
        consecutive_invalid = 0
        while accepted < count and attempts < budget:
            k = min(_CHUNK_CAP, max(count - accepted, 64), budget - attempts)
            chunk = _uniform_chunk(self.scenario, rng, k)
            attempts += k
            ok = self.scenario.states_valid(chunk)
            if not ok.any():
                consecutive_invalid += k
                if consecutive_invalid >= MAX_CONSECUTIVE_REJECTS:
                    raise InfeasibleSpaceError(
                        "no collision-free state found after "
                        f"{consecutive_invalid} consecutive draws"
                    )
                continue
            consecutive_invalid = 0
            chunk = chunk[ok]
            if informed:
                est = np.asarray(self.estimate(chunk))
                keep = est.sum(axis=0) < c_best
                chunk = chunk[keep]
                est = est[:, keep]
            if chunk.shape[0] > count - accepted:
                chunk = chunk[: count - accepted]
                if informed:
                    est = est[:, : count - accepted]
            if chunk.shape[0]:
                taken.append(chunk)
                if informed:
                    parts.append(est)
                accepted += chunk.shape[0]
        if taken:
            states = np.concatenate(taken, axis=0)
        else:
            states = np.empty((0, self.scenario.n))
        h_parts = None
        if informed:
            h_parts = (
                np.concatenate(parts, axis=1) if parts else np.empty((2, 0))
            )
        return SampleBatch(
            states=states,
            batch_index=batch_index,
            attempts=attempts,
            shrunk=accepted < count,
            h_parts=h_parts,
        )


class SpheroidSampler(BatchSampler):
    """BatchSampler that draws directly from the prolate hyperspheroid
    {x : |x - start| + |x - goal| < c_best} once an incumbent exists, for
    the configuration whose cost estimates are Euclidean distances."""

    def __init__(self, scenario: Scenario, seed: int):
        super().__init__(scenario, seed, estimate=None)
        diff = scenario.goal - scenario.start
        self._center = 0.5 * (scenario.start + scenario.goal)
        self._foci_dist = float(np.linalg.norm(diff))
        self._rotation = _rotation_to_world(diff, scenario.n)

    def draw(self, batch_index: int, count: int, c_best: float = np.inf) -> SampleBatch:
        if not np.isfinite(c_best):
            return super().draw(batch_index, count, c_best)
        if count < 1:
            raise PreconditionError("count must be at least 1")
        if c_best <= self._foci_dist:
            return SampleBatch(
                states=np.empty((0, self.scenario.n)),
                batch_index=batch_index,
                attempts=0,
                shrunk=True,
            )
        rng = batch_stream(self.seed, batch_index)
        n = self.scenario.n
        a = 0.5 * c_best
        b = math.sqrt(max(a * a - 0.25 * self._foci_dist**2, 0.0))
        radii = np.full(n, b)
        radii[0] = a
        budget = ATTEMPTS_PER_ACCEPT * count
        taken: list[np.ndarray] = []
        accepted = 0
        attempts = 0
        while accepted < count and attempts < budget:
            k = min(_CHUNK_CAP, max(count - accepted, 64), budget - attempts)
            attempts += k
            ball = rng.normal(size=(k, n))
            ball /= np.linalg.norm(ball, axis=1, keepdims=True)
            ball *= rng.random((k, 1)) ** (1.0 / n)
            chunk = (radii[None, :] * ball) @ self._rotation.T + self._center[None, :]
            d_start = np.linalg.norm(chunk - self.scenario.start[None, :], axis=1)
            d_goal = np.linalg.norm(chunk - self.scenario.goal[None, :], axis=1)
            ok = (d_start + d_goal < c_best) & self.scenario.states_valid(chunk)
            chunk = chunk[ok][: count - accepted]
            if chunk.shape[0]:
                taken.append(chunk)
                accepted += chunk.shape[0]
        if taken:
            states = np.concatenate(taken, axis=0)
        else:
            states = np.empty((0, n))
        return SampleBatch(
            states=states,
            batch_index=batch_index,
            attempts=attempts,
            shrunk=accepted < count,
        )


def _rotation_to_world(axis: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal matrix whose first column is axis normalized; identity
    when the axis is degenerate."""
    norm = np.linalg.norm(axis)
    if norm == 0.0:
        return np.eye(n)
    basis = [axis / norm]
    for i in range(n):
        cand = np.zeros(n)
        cand[i] = 1.0
        for b in basis:
            cand = cand - (cand @ b) * b
        c_norm = np.linalg.norm(cand)
        if c_norm > 1e-12:
            basis.append(cand / c_norm)
        if len(basis) == n:
            break
    return np.column_stack(basis)
