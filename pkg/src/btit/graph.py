"""Node bookkeeping for the bidirectional planner (sample/tree membership,
costs-to-come, heuristics, parent and child links) plus the sampled
geometric graph with its k-d proximity index over bounds-normalized
coordinates."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import PreconditionError
from .geometry import Scenario
from .sampling import connection_radius, default_gamma, default_knn_count

FWD = 0
BWD = 1
NO_PARENT = -1


class NodeStore:
    """Dense-id store of per-node planner state for both search directions.

    A node can be simultaneously an unexpanded sample and a vertex of either
    tree: linking a sample into a tree does not consume it (the other
    direction may still connect to it); only expansion removes it from the
    sample set. A node with no membership at all has been pruned.
    """

    def __init__(self):
        cap = 256
        self.count = 0
        self.in_samples = np.zeros(cap, dtype=bool)
        self.in_tree = np.zeros((2, cap), dtype=bool)
        self.g = np.full((2, cap), np.inf)
        # h_hat receives on-the-fly raises; h0 keeps the a-priori estimates
        # used by the sampler filter and the sample-pruning rule.
        self.h_hat = np.zeros((2, cap))
        self.h0 = np.zeros((2, cap))
        self.parent = np.full((2, cap), NO_PARENT, dtype=np.int64)
        self.parent_cost = np.full((2, cap), np.inf)
        self.children: list[list[list[int]]] = [[], []]

    def _grow(self, needed: int) -> None:
        cap = self.in_samples.shape[0]
        if needed <= cap:
            return
        new_cap = cap
        while new_cap < needed:
            new_cap *= 2

        def grown(arr, fill):
            shape = (2, new_cap) if arr.ndim == 2 else (new_cap,)
            out = np.full(shape, fill, dtype=arr.dtype)
            if arr.ndim == 2:
                out[:, : self.count] = arr[:, : self.count]
            else:
                out[: self.count] = arr[: self.count]
            return out

        self.in_samples = grown(self.in_samples, False)
        self.in_tree = grown(self.in_tree, False)
        self.g = grown(self.g, np.inf)
        self.h_hat = grown(self.h_hat, 0.0)
        self.h0 = grown(self.h0, 0.0)
        self.parent = grown(self.parent, NO_PARENT)
        self.parent_cost = grown(self.parent_cost, np.inf)

    def add_nodes(self, k: int, as_samples: bool = True) -> np.ndarray:
        """Append k nodes; returns their ids."""
        if k < 0:
            raise PreconditionError("k must be nonnegative")
        self._grow(self.count + k)
        ids = np.arange(self.count, self.count + k, dtype=np.int64)
        self.in_samples[ids] = as_samples
        for d in (FWD, BWD):
            self.children[d].extend([] for _ in range(k))
        self.count += k
        return ids

    def alive_mask(self) -> np.ndarray:
        m = self.in_samples[: self.count] | self.in_tree[FWD, : self.count]
        return m | self.in_tree[BWD, : self.count]

    # -- tree edits ---------------------------------------------------------

    def link(
        self, child: int, parent: int, direction: int, edge_cost: float, g_child: float
    ) -> None:
        """Attach child under parent in one tree, replacing any prior parent.
        The child keeps its sample status until it is expanded."""
        old = self.parent[direction, child]
        if old != NO_PARENT:
            self.children[direction][old].remove(child)
        self.parent[direction, child] = parent
        self.parent_cost[direction, child] = edge_cost
        self.g[direction, child] = g_child
        self.children[direction][parent].append(child)
        self.in_tree[direction, child] = True

    def unlink(self, child: int, direction: int) -> None:
        """Detach child from its parent in one tree and drop its tree cost."""
        old = self.parent[direction, child]
        if old != NO_PARENT:
            self.children[direction][old].remove(child)
        self.parent[direction, child] = NO_PARENT
        self.parent_cost[direction, child] = np.inf

    def root_path(self, node_id: int, direction: int) -> list[int]:
        """Ids from the tree root down to node_id along parent links."""
        path = [node_id]
        seen = {node_id}
        while True:
            p = int(self.parent[direction, path[-1]])
            if p == NO_PARENT:
                break
            if p in seen:
                raise RuntimeError("parent links form a cycle")
            seen.add(p)
            path.append(p)
        path.reverse()
        return path

    def check_tree_invariants(self) -> None:
        """Raise if parent/child links are inconsistent or cyclic; test aid."""
        for d in (FWD, BWD):
            for node in range(self.count):
                p = int(self.parent[d, node])
                if p != NO_PARENT and node not in self.children[d][p]:
                    raise AssertionError(f"child {node} missing from parent {p}")
                for ch in self.children[d][node]:
                    if int(self.parent[d, ch]) != node:
                        raise AssertionError(f"stale child link {node}->{ch}")
                has_parent = p != NO_PARENT
                finite = bool(np.isfinite(self.g[d, node]))
                is_root = finite and self.g[d, node] == 0.0 and not has_parent
                if has_parent != finite and not is_root:
                    raise AssertionError(f"node {node} dir {d}: parent/g mismatch")
                self.root_path(node, d)


class PlanGraph(NodeStore):
    """NodeStore plus state coordinates and proximity queries over the
    bounds-normalized unit cube. The index is rebuilt explicitly at batch and
    prune boundaries, the only points where the alive population changes
    between neighbor queries."""

    def __init__(
        self,
        scenario: Scenario,
        radius_gamma: float | None = None,
        connection: str = "rdisk",
        k_gamma: float = 2.0,
    ):
        if connection not in ("rdisk", "knn"):
            raise PreconditionError("connection must be 'rdisk' or 'knn'")
        super().__init__()
        self.scenario = scenario
        if radius_gamma is None:
            radius_gamma = (
                scenario.radius_gamma
                if scenario.radius_gamma is not None
                else default_gamma(scenario.n)
            )
        self.radius_gamma = float(radius_gamma)
        self.connection = connection
        self.k_gamma = float(k_gamma)
        self._lower = scenario.lower
        self._span = scenario.upper - scenario.lower
        self.states = np.empty((256, scenario.n))
        self._tree: cKDTree | None = None
        self._index_ids = np.empty(0, dtype=np.int64)
        self.q = 0
        self.radius = np.inf
        self.k_count = 0

    def add_states(self, states: np.ndarray, as_samples: bool = True) -> np.ndarray:
        """Append states as nodes; returns their new ids."""
        states = np.asarray(states, dtype=float)
        if states.ndim != 2 or states.shape[1] != self.scenario.n:
            raise PreconditionError("states must be (K, n)")
        ids = self.add_nodes(states.shape[0], as_samples=as_samples)
        if not ids.size:
            return ids
        if self.count > self.states.shape[0]:
            cap = self.states.shape[0]
            while cap < self.count:
                cap *= 2
            grown = np.empty((cap, self.scenario.n))
            grown[: ids[0]] = self.states[: ids[0]]
            self.states = grown
        self.states[ids[0] : self.count] = states
        return ids

    def normalized(self, states: np.ndarray) -> np.ndarray:
        """Map states into the unit cube via the scenario bounds."""
        return (states - self._lower[None, :]) / self._span[None, :]

    def rebuild_index(self) -> None:
        """Rebuild the k-d tree over alive nodes and refresh the connection
        radius (or neighbor count) for the new population size."""
        alive = self.alive_mask()
        self._index_ids = np.flatnonzero(alive).astype(np.int64)
        self.q = int(self._index_ids.size)
        if self.q:
            self._tree = cKDTree(self.normalized(self.states[self._index_ids]))
        else:
            self._tree = None
        if self.q >= 2:
            self.radius = connection_radius(self.q, self.scenario.n, self.radius_gamma)
            self.k_count = default_knn_count(self.q, self.k_gamma)
        else:
            self.radius = np.inf
            self.k_count = self.q

    def near(self, node_id: int) -> np.ndarray:
        """Ids of indexed nodes near node_id (inclusive radius, or the k
        nearest), excluding node_id itself, ascending."""
        if node_id < 0 or node_id >= self.count:
            raise PreconditionError(f"unknown node id {node_id}")
        if self._tree is None:
            return np.empty(0, dtype=np.int64)
        point = self.normalized(self.states[node_id][None, :])[0]
        if self.connection == "rdisk":
            rows = self._tree.query_ball_point(point, self.radius)
            ids = self._index_ids[np.asarray(rows, dtype=np.int64)]
            ids = ids[ids != node_id]
        else:
            k = min(self.k_count + 1, self.q)
            dist, rows = self._tree.query(point, k=k)
            rows = np.atleast_1d(np.asarray(rows, dtype=np.int64))
            dist = np.atleast_1d(dist)
            order = np.lexsort((self._index_ids[rows], dist))
            ids = self._index_ids[rows[order]]
            ids = ids[ids != node_id][: self.k_count]
        return np.sort(ids)

    def neighbors(self, node_id: int, direction: int) -> np.ndarray:
        """Connection candidates for expanding node_id in one direction:
        near() restricted to that tree's vertices and unexpanded samples,
        plus the node's opposite-tree parent and its same-tree children."""
        base = self.near(node_id)
        keep = self.in_tree[direction, base] | self.in_samples[base]
        extras = list(self.children[direction][node_id])
        opp = self.parent[1 - direction, node_id]
        if opp != NO_PARENT:
            extras.append(int(opp))
        merged = np.concatenate([base[keep], np.asarray(extras, dtype=np.int64)])
        return np.unique(merged)
