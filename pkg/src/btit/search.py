"""Anytime bidirectional kinodynamic planning over batches of informed
samples: two steering-connected trees meet at shared sample states, an
incumbent-aware lower bound ends each batch, and pruning plus informed
resampling focus later batches. A single-tree baseline and an adapter for
explicit weighted digraphs share the same engine."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import TAU_CAP, SteeringResult, steer_batch, synthesize
from .errors import PreconditionError
from .geometry import Scenario, load_scenario
from .graph import BWD, FWD, NO_PARENT, NodeStore, PlanGraph
from .presets import get_system
from .sampling import BatchSampler, SpheroidSampler

EPS = 1e-9

FHAT = "fhat"
MM_MAX = "mm"
FIRST_INTERSECTION_PLUS_LB = "first-lb"
LB_ONLY = "lb"
R_DISK = "rdisk"
K_NN = "knn"
CONTROLLER = "controller"
EUCLIDEAN = "euclidean"

# Deterministic model-time charges in microseconds per unit of work. The
# planner budget runs entirely on this internal clock, so a trial replays
# byte-identically regardless of host load or parallelism; the constants are
# calibrated so model seconds track wall seconds on a desktop-class core.
CHARGE_US = {
    "steer_call": 550.0,
    "steer_pair_base": 0.5,
    "steer_pair_per_dim": 4.25,
    "collide_row_base": 0.12,
    "collide_row_per_dim": 0.034,
    "sample_draw": 0.3,
    "queue_op": 1.0,
    "near_base": 5.0,
    "near_item": 0.05,
    "rebuild_node": 0.15,
    "expand_item": 2.0,
}


def queue_key(g: float, h_hat: float, priority_policy: str = FHAT) -> float:
    """Priority of a queued state: g + h_hat, or under the meet-in-the-middle
    policy max(g + h_hat, 2 g) so neither tree runs past the midpoint."""
    if priority_policy not in (FHAT, MM_MAX):
        raise PreconditionError(f"priority_policy must be {FHAT!r} or {MM_MAX!r}")
    fhat = g + h_hat
    return max(fhat, 2.0 * g) if priority_policy == MM_MAX else fhat


class VirtualClock:
    """Integer-microsecond planner clock for reproducible timings."""

    __slots__ = ("us",)

    def __init__(self):
        self.us = 0

    def charge(self, amount_us: float) -> None:
        self.us += int(round(amount_us))

    @property
    def seconds(self) -> float:
        return self.us / 1e6


class _NullClock:
    """Clock stub for hosts that do not meter time."""

    __slots__ = ()
    us = 0
    seconds = 0.0

    def charge(self, amount_us: float) -> None:
        pass


@dataclass(frozen=True)
class PlannerConfig:
    """Knobs for one planning trial.

    batch_size states are added per batch within time_budget model seconds.
    priority_policy orders the queues by g + h_hat (FHAT) or by
    max(g + h_hat, 2 g) (MM_MAX); termination_policy ends a batch at the
    first tree intersection plus the lower-bound test, or by the bound
    alone. connection picks r-disk or k-nearest candidate sets, heuristic
    picks steering-based or Euclidean estimates.
    """

    batch_size: int = 200
    time_budget: float = 2.0
    seed: int = 0
    segments: int = 200
    priority_policy: str = FHAT
    termination_policy: str = FIRST_INTERSECTION_PLUS_LB
    connection: str = R_DISK
    heuristic: str = CONTROLLER
    radius_gamma: float | None = None
    k_gamma: float = 2.0

    def __post_init__(self):
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            raise PreconditionError("batch_size must be a positive integer")
        if not (self.time_budget > 0.0 and math.isfinite(self.time_budget)):
            raise PreconditionError("time_budget must be positive and finite")
        if not isinstance(self.segments, int) or self.segments < 1:
            raise PreconditionError("segments must be a positive integer")
        if self.priority_policy not in (FHAT, MM_MAX):
            raise PreconditionError(f"priority_policy must be {FHAT!r} or {MM_MAX!r}")
        if self.termination_policy not in (FIRST_INTERSECTION_PLUS_LB, LB_ONLY):
            raise PreconditionError(
                f"termination_policy must be {FIRST_INTERSECTION_PLUS_LB!r} or {LB_ONLY!r}"
            )
        if self.connection not in (R_DISK, K_NN):
            raise PreconditionError(f"connection must be {R_DISK!r} or {K_NN!r}")
        if self.heuristic not in (CONTROLLER, EUCLIDEAN):
            raise PreconditionError(
                f"heuristic must be {CONTROLLER!r} or {EUCLIDEAN!r}"
            )
        if self.radius_gamma is not None and not self.radius_gamma > 0.0:
            raise PreconditionError("radius_gamma must be positive")
        if not self.k_gamma > 0.0:
            raise PreconditionError("k_gamma must be positive")


@dataclass(frozen=True)
class AnytimeEvent:
    """One incumbent improvement: model time, cost, batch, and the path."""

    wall_time_s: float
    cost: float
    batch: int
    path_ids: tuple[int, ...] = ()


@dataclass
class PlanResult:
    """Outcome of one sampling-planner trial."""

    planner: str
    scenario: str
    seed: int
    cost: float
    events: list[AnytimeEvent]
    path_ids: list[int]
    path_states: np.ndarray | None
    batches: int
    expansions: int
    samples: int
    elapsed_s: float
    node_states: np.ndarray | None = None

    @property
    def solved(self) -> bool:
        return math.isfinite(self.cost)

    def event_states(self, event: AnytimeEvent) -> np.ndarray:
        """States along one recorded incumbent path (ids stay stable)."""
        return self.node_states[np.asarray(event.path_ids, dtype=np.int64)]


@dataclass
class GraphPlanResult:
    """Outcome of a run on an explicit weighted digraph."""

    cost: float
    expansions: list[tuple[int, float, int]]
    h_hat: np.ndarray
    path_ids: list[int]
    events: list[AnytimeEvent]
    batches: int


class _DirQueue:
    """Lazy priority queue for one direction.

    Three heaps (policy key, g, g + h_hat) share one snapshot dict; stale
    heap entries are skipped when their snapshot no longer matches. The
    auxiliary heaps serve the termination bounds without re-sorting.
    """

    __slots__ = ("heap", "gheap", "fheap", "live")

    def __init__(self):
        self.heap: list[tuple[float, float, int]] = []
        self.gheap: list[tuple[float, int]] = []
        self.fheap: list[tuple[float, int]] = []
        self.live: dict[int, tuple[float, float, float]] = {}

    def push(self, node: int, key: float, g: float, fhat: float) -> None:
        self.live[node] = (key, g, fhat)
        heapq.heappush(self.heap, (key, -g, node))
        heapq.heappush(self.gheap, (g, node))
        heapq.heappush(self.fheap, (fhat, node))

    def peek(self) -> tuple[float, float, int] | None:
        heap = self.heap
        while heap:
            key, neg_g, node = heap[0]
            ent = self.live.get(node)
            if ent is not None and ent[0] == key and ent[1] == -neg_g:
                return heap[0]
            heapq.heappop(heap)
        return None

    def pop(self) -> int:
        top = self.peek()
        if top is None:
            raise RuntimeError("pop from an empty queue")
        heapq.heappop(self.heap)
        node = top[2]
        del self.live[node]
        return node

    def g_min(self) -> float:
        heap = self.gheap
        while heap:
            g, node = heap[0]
            ent = self.live.get(node)
            if ent is not None and ent[1] == g:
                return g
            heapq.heappop(heap)
        return math.inf

    def fhat_min(self) -> float:
        heap = self.fheap
        while heap:
            fhat, node = heap[0]
            ent = self.live.get(node)
            if ent is not None and ent[2] == fhat:
                return fhat
            heapq.heappop(heap)
        return math.inf

    def clear(self) -> None:
        self.heap.clear()
        self.gheap.clear()
        self.fheap.clear()
        self.live.clear()


class SteeringEvaluator:
    """Steering-backed edge costs, heuristics, and collision checks with
    per-id-pair caches and model-time charging.

    Duration windows start at the normalized-distance bracket
    min(2 d + 1, cap) and widen geometrically while the best cost exceeds
    the window: since cost(tau) >= tau, a result below its window is the
    unconstrained optimum.
    """

    def __init__(self, scenario: Scenario, system, clock, segments: int, heuristic: str):
        self.scenario = scenario
        self.system = system
        self.clock = clock
        self.segments = int(segments)
        self.heuristic = heuristic
        self._span = scenario.upper - scenario.lower
        self.pair_us = (
            CHARGE_US["steer_pair_base"] + CHARGE_US["steer_pair_per_dim"] * system.n
        )
        self.graph: PlanGraph | None = None
        self.edge_cache: dict[tuple[int, int], tuple[float, float, np.ndarray]] = {}
        self.valid_cache: dict[tuple[int, int], bool] = {}

    def steer_states(self, x0s: np.ndarray, x1s: np.ndarray):
        """Batched minimum-cost connections. Pairs whose initial duration
        window truncates the optimum (cost above the window, so the
        unconstrained minimum lies beyond it) are re-run once with the full
        window."""
        d = np.linalg.norm((x1s - x0s) / self._span[None, :], axis=1)
        w = np.minimum(2.0 * d + 1.0, TAU_CAP)
        tau, cost, dvec, ok = steer_batch(self.system, x0s, x1s, w)
        self.clock.charge(CHARGE_US["steer_call"] + self.pair_us * x0s.shape[0])
        widen = (w < TAU_CAP) & (~ok | (cost > w))
        if widen.any():
            idx = np.flatnonzero(widen)
            t2, c2, d2, ok2 = steer_batch(self.system, x0s[idx], x1s[idx], TAU_CAP)
            self.clock.charge(CHARGE_US["steer_call"] + self.pair_us * idx.size)
            tau[idx] = t2
            cost[idx] = c2
            dvec[idx] = d2
            ok[idx] = ok2
        return tau, cost, dvec, ok

    def estimate_parts(self, states: np.ndarray) -> np.ndarray:
        """A-priori estimates: row 0 from the start to each state, row 1
        from each state to the goal."""
        if self.heuristic == EUCLIDEAN:
            d0 = np.linalg.norm(states - self.scenario.start[None, :], axis=1)
            d1 = np.linalg.norm(states - self.scenario.goal[None, :], axis=1)
            return np.stack([d0, d1])
        starts = np.broadcast_to(self.scenario.start, states.shape)
        goals = np.broadcast_to(self.scenario.goal, states.shape)
        from_start = self.steer_states(np.ascontiguousarray(starts), states)[1]
        to_goal = self.steer_states(states, np.ascontiguousarray(goals))[1]
        return np.stack([from_start, to_goal])

    def _store_pairs(self, keys, tails, heads) -> np.ndarray:
        states = self.graph.states
        tau, cost, dvec, _ = self.steer_states(states[tails], states[heads])
        for j, key in enumerate(keys):
            self.edge_cache[key] = (float(cost[j]), float(tau[j]), dvec[j].copy())
        return cost

    def edge_costs(self, x: int, nbrs: np.ndarray, forward: bool) -> np.ndarray:
        """Steering costs for the directed pairs (x -> nbr) or (nbr -> x)."""
        out = np.empty(nbrs.size)
        miss_i: list[int] = []
        miss_keys: list[tuple[int, int]] = []
        for i in range(nbrs.size):
            nb = int(nbrs[i])
            key = (x, nb) if forward else (nb, x)
            hit = self.edge_cache.get(key)
            if hit is None:
                miss_i.append(i)
                miss_keys.append(key)
            else:
                out[i] = hit[0]
        if miss_i:
            tails = np.fromiter((k[0] for k in miss_keys), dtype=np.int64)
            heads = np.fromiter((k[1] for k in miss_keys), dtype=np.int64)
            cost = self._store_pairs(miss_keys, tails, heads)
            out[miss_i] = cost
        return out

    def validate(self, tail: int, head: int) -> bool:
        """Collision-check the connection tail -> head at the configured
        sample count; cached per ordered pair."""
        key = (tail, head)
        hit = self.valid_cache.get(key)
        if hit is not None:
            return hit
        ent = self.edge_cache.get(key)
        if ent is None:
            tails = np.array([tail], dtype=np.int64)
            heads = np.array([head], dtype=np.int64)
            self._store_pairs([key], tails, heads)
            ent = self.edge_cache[key]
        cost, tau, dvec = ent
        if not math.isfinite(cost):
            ok = False
        else:
            states = self.graph.states
            sr = SteeringResult(
                tau_star=tau, cost=cost, x0=states[tail], x1=states[head], d_vec=dvec
            )
            traj = synthesize(self.system, sr, self.segments)
            ok = bool(self.scenario.states_valid(traj.states).all())
            row_us = (
                CHARGE_US["collide_row_base"]
                + CHARGE_US["collide_row_per_dim"] * self.system.n
            )
            self.clock.charge(row_us * (self.segments + 1))
        self.valid_cache[key] = ok
        return ok


class _SamplingHost:
    """Engine host for the sampling planners: geometry-backed neighbor
    queries, steering edges, informed batches, and the model clock."""

    def __init__(self, scenario: Scenario, cfg: PlannerConfig):
        self.scenario = scenario
        self.cfg = cfg
        self.system = get_system(scenario.system)
        self.clock = VirtualClock()
        self.evaluator = SteeringEvaluator(
            scenario, self.system, self.clock, cfg.segments, cfg.heuristic
        )
        self.graph = PlanGraph(
            scenario,
            radius_gamma=cfg.radius_gamma,
            connection=cfg.connection,
            k_gamma=cfg.k_gamma,
        )
        self.evaluator.graph = self.graph
        if cfg.heuristic == EUCLIDEAN:
            self.sampler = SpheroidSampler(scenario, cfg.seed)
        else:
            self.sampler = BatchSampler(
                scenario, cfg.seed, estimate=self.evaluator.estimate_parts
            )
        self.samples_drawn = 0

    def begin_batch(self, engine: "_Engine", batch_size: int) -> int:
        engine.batch_index += 1
        engine.first_intersection = False
        batch = self.sampler.draw(engine.batch_index, batch_size, engine.c_best)
        self.clock.charge(CHARGE_US["sample_draw"] * batch.attempts)
        graph = self.graph
        ids = graph.add_states(batch.states)
        if ids.size:
            if batch.h_parts is not None:
                graph.h0[BWD, ids] = batch.h_parts[0]
                graph.h0[FWD, ids] = batch.h_parts[1]
            else:
                parts = self.evaluator.estimate_parts(batch.states)
                graph.h0[BWD, ids] = parts[0]
                graph.h0[FWD, ids] = parts[1]
            graph.h_hat[:, ids] = graph.h0[:, ids]
            self.samples_drawn += int(ids.size)
        graph.rebuild_index()
        self.clock.charge(CHARGE_US["rebuild_node"] * graph.q)
        return int(ids.size)

    def neighbors(self, x: int, d: int) -> np.ndarray:
        ids = self.graph.neighbors(x, d)
        self.clock.charge(CHARGE_US["near_base"] + CHARGE_US["near_item"] * ids.size)
        return ids

    def edge_costs(self, x: int, nbrs: np.ndarray, d: int) -> np.ndarray:
        return self.evaluator.edge_costs(x, nbrs, forward=(d == FWD))

    def validate(self, tail: int, head: int) -> bool:
        return self.evaluator.validate(tail, head)


class _ExplicitHost:
    """Engine host for explicit weighted digraphs: adjacency-based
    neighbors, exact edge weights, trivially valid edges, no metered time."""

    def __init__(self, store: NodeStore, num_vertices: int, edges):
        self.clock = _NullClock()
        self.store = store
        out_adj: list[list[int]] = [[] for _ in range(num_vertices)]
        in_adj: list[list[int]] = [[] for _ in range(num_vertices)]
        weights: dict[tuple[int, int], float] = {}
        for edge in edges:
            u, v, w = int(edge[0]), int(edge[1]), float(edge[2])
            if not (0 <= u < num_vertices and 0 <= v < num_vertices):
                raise PreconditionError(f"edge ({u}, {v}) is out of range")
            if not math.isfinite(w) or w < 0.0:
                raise PreconditionError("edge weights must be finite and nonnegative")
            key = (u, v)
            if key in weights:
                weights[key] = min(weights[key], w)
            else:
                weights[key] = w
                out_adj[u].append(v)
                in_adj[v].append(u)
        self.weights = weights
        self.out_adj = [np.array(sorted(a), dtype=np.int64) for a in out_adj]
        self.in_adj = [np.array(sorted(a), dtype=np.int64) for a in in_adj]

    def begin_batch(self, engine: "_Engine", batch_size: int) -> int:
        engine.batch_index += 1
        engine.first_intersection = False
        store = self.store
        count = store.count
        free = ~(store.in_tree[FWD, :count] | store.in_tree[BWD, :count])
        if math.isfinite(engine.c_best):
            apriori = store.h0[BWD, :count] + store.h0[FWD, :count]
            free &= apriori < engine.c_best
        store.in_samples[:count] = free
        return int(free.sum())

    def neighbors(self, x: int, d: int) -> np.ndarray:
        # The whole edge set plays the role of the RGG, so every adjacent
        # vertex is a candidate; the sample/tree filter would hide the roots
        # from the opposite search, and the parent/children hooks are always
        # subsets of adjacency here.
        return self.out_adj[x] if d == FWD else self.in_adj[x]

    def edge_costs(self, x: int, nbrs: np.ndarray, d: int) -> np.ndarray:
        weights = self.weights
        if d == FWD:
            return np.array([weights[(x, int(nb))] for nb in nbrs])
        return np.array([weights[(int(nb), x)] for nb in nbrs])

    def validate(self, tail: int, head: int) -> bool:
        return True


class _Engine:
    """Shared bidirectional/single-tree search core over a node store and a
    host that supplies neighbors, edge costs, validity, and batches."""

    def __init__(
        self,
        store: NodeStore,
        host,
        start_id: int,
        goal_id: int,
        priority: str,
        termination: str,
        bidirectional: bool,
        log_expansions: bool = False,
    ):
        self.store = store
        self.host = host
        self.start_id = start_id
        self.goal_id = goal_id
        self.mm = priority == MM_MAX and bidirectional
        self.first_lb = termination == FIRST_INTERSECTION_PLUS_LB and bidirectional
        self.bidirectional = bidirectional
        self.qs = (_DirQueue(), _DirQueue())
        self.c_best = math.inf
        self.meet_id = -1
        self.incumbent: list[int] = []
        self.protected: frozenset[int] = frozenset((start_id, goal_id))
        self.events: list[AnytimeEvent] = []
        self.batch_index = -1
        self.first_intersection = False
        self.tie_fwd = True
        self.n_expansions = 0
        self.log: list[tuple[int, float, int]] | None = [] if log_expansions else None

    # -- queues --------------------------------------------------------------

    def _push(self, d: int, node: int) -> None:
        store = self.store
        g = float(store.g[d, node])
        fhat = g + float(store.h_hat[d, node])
        key = max(fhat, 2.0 * g) if self.mm else fhat
        self.qs[d].push(node, key, g, fhat)
        self.host.clock.charge(CHARGE_US["queue_op"])

    def seed_queues(self) -> None:
        self._push(FWD, self.start_id)
        if self.bidirectional:
            self._push(BWD, self.goal_id)

    def clear_queues(self) -> None:
        self.qs[FWD].clear()
        self.qs[BWD].clear()

    def _select_direction(self) -> int:
        if not self.bidirectional:
            return FWD
        top_f = self.qs[FWD].peek()
        top_b = self.qs[BWD].peek()
        if top_b is None:
            return FWD
        if top_f is None:
            return BWD
        if top_f[:2] < top_b[:2]:
            return FWD
        if top_b[:2] < top_f[:2]:
            return BWD
        # Exact key ties alternate direction; a fixed preference would let
        # one side's reseeded root shadow the other's forever.
        d = FWD if self.tie_fwd else BWD
        self.tie_fwd = not self.tie_fwd
        return d

    # -- incumbent ------------------------------------------------------------

    def _record_meet(self, node: int, total: float) -> None:
        self.c_best = total
        self.meet_id = node
        path = self.store.root_path(node, FWD)
        if self.bidirectional:
            back = self.store.root_path(node, BWD)
            path = path + back[::-1][1:]
        self.incumbent = path
        self.protected = frozenset(path) | {self.start_id, self.goal_id}
        self.events.append(
            AnytimeEvent(self.host.clock.seconds, total, self.batch_index, tuple(path))
        )

    def _meet_edge_ok(self, node: int, opp: int) -> bool:
        parent = int(self.store.parent[opp, node])
        if parent == NO_PARENT:
            return True
        if opp == BWD:
            return self.host.validate(node, parent)
        return self.host.validate(parent, node)

    def _try_meet(self, node: int, d: int) -> bool:
        """Check the two-tree junction at node after a direction-d link;
        update the incumbent on improvement. Returns whether it improved."""
        store = self.store
        if self.bidirectional:
            if not (store.in_tree[FWD, node] and store.in_tree[BWD, node]):
                return False
            total = float(store.g[FWD, node] + store.g[BWD, node])
            if total < self.c_best and self._meet_edge_ok(node, 1 - d):
                self._record_meet(node, total)
                return True
            return False
        if node == self.goal_id:
            total = float(store.g[FWD, node])
            if total < self.c_best:
                self._record_meet(node, total)
                return True
        return False

    def _propagate(self, d: int, node: int) -> None:
        """Push a g decrease at node through its subtree, refreshing queued
        descendants and re-checking junctions."""
        store = self.store
        stack = list(store.children[d][node])
        while stack:
            u = stack.pop()
            store.g[d, u] = store.g[d, int(store.parent[d, u])] + store.parent_cost[d, u]
            if u in self.qs[d].live:
                self._push(d, u)
            self._try_meet(u, d)
            stack.extend(store.children[d][u])

    # -- expansion -----------------------------------------------------------

    def expand(self, x: int, d: int) -> None:
        store = self.store
        host = self.host
        store.in_tree[d, x] = True
        store.in_samples[x] = False
        self.n_expansions += 1
        if self.log is not None:
            self.log.append((x, float(store.g[d, x]), d))
        nbrs = host.neighbors(x, d)
        if nbrs.size == 0:
            return
        host.clock.charge(CHARGE_US["expand_item"] * nbrs.size)
        costs = host.edge_costs(x, nbrs, d)
        g_x = float(store.g[d, x])
        for i in range(nbrs.size):
            nb = int(nbrs[i])
            if store.parent[d, nb] == x:
                # Tree edge: refresh the child's queue entry unconditionally.
                self._push(d, nb)
                continue
            g_new = g_x + float(costs[i])
            if not g_new < store.g[d, nb] - EPS:
                continue
            tail, head = (x, nb) if d == FWD else (nb, x)
            if not host.validate(tail, head):
                continue
            store.link(nb, x, d, float(costs[i]), g_new)
            self._propagate(d, nb)
            met = self._try_meet(nb, d)
            if met and self.first_lb:
                self.first_intersection = True
                break
            if nb in self.qs[d].live:
                self._push(d, nb)
            else:
                if self.bidirectional:
                    h_local = max(g_new, float(store.h_hat[d, nb]))
                else:
                    h_local = float(store.h_hat[d, nb])
                if g_new + h_local <= self.c_best:
                    self._push(d, nb)

    # -- batch boundaries ------------------------------------------------------

    def terminate(self) -> bool:
        """True when the incumbent is at most the certified lower bound over
        both queues (or the batch already met the trees under the
        first-intersection policy)."""
        if self.first_lb and self.first_intersection:
            return True
        if not math.isfinite(self.c_best):
            return False
        q_f, q_b = self.qs
        top_f = q_f.peek()
        top_b = q_b.peek()
        key_min = min(
            top_f[0] if top_f is not None else math.inf,
            top_b[0] if top_b is not None else math.inf,
        )
        bound = max(
            key_min,
            q_f.fhat_min(),
            q_b.fhat_min(),
            q_f.g_min() + q_b.g_min(),
        )
        return self.c_best <= bound

    def prune(self) -> None:
        """Drop samples whose a-priori estimate cannot beat the incumbent and
        tree vertices whose current estimate exceeds it; orphaned descendants
        revert to samples when they still pass the a-priori filter."""
        if not math.isfinite(self.c_best):
            return
        store = self.store
        c_best = self.c_best
        count = store.count
        apriori = store.h0[BWD, :count] + store.h0[FWD, :count]
        samples = np.flatnonzero(store.in_samples[:count])
        for u in samples[apriori[samples] >= c_best]:
            if int(u) not in self.protected:
                store.in_samples[u] = False
        for d in (FWD, BWD):
            verts = np.flatnonzero(store.in_tree[d, :count])
            bad = store.g[d, verts] + store.h_hat[d, verts] > c_best
            for v in verts[bad]:
                v = int(v)
                if v in self.protected or not store.in_tree[d, v]:
                    continue
                self._drop_subtree(v, d, apriori)

    def _drop_subtree(self, root: int, d: int, apriori: np.ndarray) -> None:
        store = self.store
        store.unlink(root, d)
        order = [root]
        stack = list(store.children[d][root])
        while stack:
            u = stack.pop()
            order.append(u)
            stack.extend(store.children[d][u])
        c_best = self.c_best
        for u in order:
            store.in_tree[d, u] = False
            store.parent[d, u] = NO_PARENT
            store.parent_cost[d, u] = np.inf
            store.g[d, u] = np.inf
            store.children[d][u] = []
            store.in_samples[u] = bool(apriori[u] < c_best)

    # -- drivers ---------------------------------------------------------------

    def _queues_drained(self) -> bool:
        if not self.qs[FWD].live:
            return True
        return self.bidirectional and not self.qs[BWD].live

    def _batch_step(self) -> bool:
        """One terminate-check/select/expand step; False ends the batch."""
        if self._queues_drained():
            return False
        if self.bidirectional:
            if self.terminate():
                self.prune()
                self.clear_queues()
                return False
            d = self._select_direction()
        else:
            if math.isfinite(self.c_best) and self.qs[FWD].fhat_min() >= self.c_best:
                self.prune()
                self.clear_queues()
                return False
            d = FWD
        x = self.qs[d].pop()
        self.host.clock.charge(CHARGE_US["queue_op"])
        self.expand(x, d)
        return True

    def run_timed(self, budget_us: int, batch_size: int) -> None:
        host = self.host
        while host.clock.us < budget_us:
            if self._queues_drained():
                added = host.begin_batch(self, batch_size)
                if added == 0 and math.isfinite(self.c_best):
                    break
                self.seed_queues()
                continue
            self._batch_step()

    def _state_key(self) -> bytes:
        """Byte snapshot of everything a batch transition depends on. A batch
        that neither improves the incumbent nor rewires a tree can still set
        up an improvement for the next one, so the only safe stopping rule is
        a repeated snapshot: the engine is deterministic, and a revisited
        state proves the run is periodic from here on."""
        store = self.store
        count = store.count
        return b"".join(
            (
                np.float64(self.c_best).tobytes(),
                bytes([self.tie_fwd]),
                store.parent[:, :count].tobytes(),
                store.parent_cost[:, :count].tobytes(),
                store.g[:, :count].tobytes(),
                store.in_tree[:, :count].tobytes(),
                store.in_samples[:count].tobytes(),
            )
        )

    def run_to_fixpoint(self, max_batches: int) -> None:
        seen = set()
        while self.batch_index + 1 < max_batches:
            self.host.begin_batch(self, 0)
            self.seed_queues()
            while self._batch_step():
                pass
            self.clear_queues()
            key = self._state_key()
            if key in seen:
                break
            seen.add(key)


def _run_sampling(scenario, cfg: PlannerConfig, bidirectional: bool, name: str):
    if isinstance(scenario, (str,)):
        scenario = load_scenario(scenario)
    if cfg is None:
        cfg = PlannerConfig()
    host = _SamplingHost(scenario, cfg)
    graph = host.graph
    roots = np.vstack([scenario.start, scenario.goal])
    ids = graph.add_states(roots, as_samples=False)
    start_id, goal_id = int(ids[0]), int(ids[1])
    parts = host.evaluator.estimate_parts(roots)
    graph.h0[BWD, ids] = parts[0]
    graph.h0[FWD, ids] = parts[1]
    # The roots' own estimates are exact by definition.
    graph.h0[FWD, goal_id] = 0.0
    graph.h0[BWD, start_id] = 0.0
    graph.h_hat[:, ids] = graph.h0[:, ids]
    graph.in_tree[FWD, start_id] = True
    graph.g[FWD, start_id] = 0.0
    if bidirectional:
        graph.in_tree[BWD, goal_id] = True
        graph.g[BWD, goal_id] = 0.0
    else:
        graph.in_samples[goal_id] = True
    engine = _Engine(
        graph,
        host,
        start_id,
        goal_id,
        cfg.priority_policy,
        cfg.termination_policy,
        bidirectional,
    )
    if np.array_equal(scenario.start, scenario.goal):
        engine.batch_index = 0
        engine.c_best = 0.0
        engine.meet_id = start_id
        engine.incumbent = [start_id]
        engine.events.append(
            AnytimeEvent(host.clock.seconds, 0.0, 0, (start_id,))
        )
    else:
        engine.run_timed(int(round(cfg.time_budget * 1e6)), cfg.batch_size)
    path_states = None
    if engine.incumbent:
        path_states = graph.states[np.asarray(engine.incumbent, dtype=np.int64)].copy()
    return PlanResult(
        planner=name,
        scenario=scenario.name,
        seed=cfg.seed,
        cost=engine.c_best,
        events=engine.events,
        path_ids=list(engine.incumbent),
        path_states=path_states,
        batches=engine.batch_index + 1,
        expansions=engine.n_expansions,
        samples=host.samples_drawn,
        elapsed_s=host.clock.seconds,
        node_states=graph.states[: graph.count].copy(),
    )


def plan(scenario, config: PlannerConfig | None = None) -> PlanResult:
    """Run the bidirectional anytime planner on a scenario (object or name)."""
    return _run_sampling(scenario, config, bidirectional=True, name="btit")


def plan_baseline(scenario, config: PlannerConfig | None = None) -> PlanResult:
    """Run the single-tree baseline: same batching, sampling, pruning, and
    edge model, one forward queue, batch ends when its best estimate can no
    longer beat the incumbent."""
    return _run_sampling(scenario, config, bidirectional=False, name="baseline")


def plan_on_graph(
    num_vertices: int,
    edges,
    start: int,
    goal: int,
    h_forward=None,
    h_backward=None,
    priority_policy: str = FHAT,
    termination_policy: str = LB_ONLY,
    max_batches: int | None = None,
    bidirectional: bool = True,
) -> GraphPlanResult:
    """Run the search engine on an explicit weighted digraph.

    edges is an iterable of (u, v, weight) with nonnegative finite weights;
    h_forward[v] underestimates the cost v -> goal and h_backward[v] the
    cost start -> v (both default to zero). Batches re-open every vertex
    outside the trees whose a-priori estimate beats the incumbent, and the
    driver stops once the whole planner state repeats. bidirectional=False
    runs the single-tree baseline on the same graph.
    """
    if not isinstance(num_vertices, int) or num_vertices < 1:
        raise PreconditionError("num_vertices must be a positive integer")
    if not (0 <= start < num_vertices and 0 <= goal < num_vertices):
        raise PreconditionError("start and goal must be vertex ids")
    if priority_policy not in (FHAT, MM_MAX):
        raise PreconditionError(f"priority_policy must be {FHAT!r} or {MM_MAX!r}")
    if termination_policy not in (FIRST_INTERSECTION_PLUS_LB, LB_ONLY):
        raise PreconditionError(
            f"termination_policy must be {FIRST_INTERSECTION_PLUS_LB!r} or {LB_ONLY!r}"
        )
    store = NodeStore()
    store.add_nodes(num_vertices, as_samples=False)
    for name, values in (("h_forward", h_forward), ("h_backward", h_backward)):
        if values is None:
            continue
        arr = np.asarray(values, dtype=float)
        if arr.shape != (num_vertices,):
            raise PreconditionError(f"{name} must have one value per vertex")
        if not np.isfinite(arr).all() or np.any(arr < 0.0):
            raise PreconditionError(f"{name} must be finite and nonnegative")
        store.h0[FWD if name == "h_forward" else BWD, :num_vertices] = arr
    store.h_hat[:, :num_vertices] = store.h0[:, :num_vertices]
    host = _ExplicitHost(store, num_vertices, edges)
    store.in_tree[FWD, start] = True
    store.g[FWD, start] = 0.0
    if bidirectional:
        store.in_tree[BWD, goal] = True
        store.g[BWD, goal] = 0.0
    engine = _Engine(
        store,
        host,
        start,
        goal,
        priority_policy,
        termination_policy,
        bidirectional=bidirectional,
        log_expansions=True,
    )
    if start == goal:
        engine.c_best = 0.0
        engine.meet_id = start
        engine.incumbent = [start]
        engine.events.append(AnytimeEvent(0.0, 0.0, 0, (start,)))
        engine.batch_index = 0
    else:
        cap = max_batches if max_batches is not None else 2 * num_vertices + 4
        if cap < 1:
            raise PreconditionError("max_batches must be positive")
        engine.run_to_fixpoint(cap)
    return GraphPlanResult(
        cost=engine.c_best,
        expansions=list(engine.log or []),
        h_hat=store.h_hat[:, :num_vertices].copy(),
        path_ids=list(engine.incumbent),
        events=engine.events,
        batches=engine.batch_index + 1,
    )
