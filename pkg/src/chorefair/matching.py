"""Bipartite matching: maximum matching, right-saturated 1- and 2-matchings,
minimum-cost perfect matching and Erdos-Renyi bipartite sampling.

Vertices are 0-based. Left vertices are agents, right vertices are chores
whenever these routines are called from the allocators.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._rng import uniform_open01

_INF = float("inf")


@dataclass(frozen=True)
class BipartiteGraph:
    n_left: int
    n_right: int
    edges: frozenset = frozenset()
    adj: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_left < 0 or self.n_right < 0:
            raise ValueError("vertex counts must be nonnegative")
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        for u, v in edges:
            if not (0 <= u < self.n_left and 0 <= v < self.n_right):
                raise ValueError(f"edge ({u}, {v}) out of range")
        adj = [[] for _ in range(self.n_left)]
        for u, v in edges:
            adj[u].append(v)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "adj", tuple(tuple(sorted(a)) for a in adj))

    @classmethod
    def from_adjacency(cls, n_right, adj):
        return cls(len(adj), n_right, frozenset((u, v) for u, vs in enumerate(adj) for v in vs))

    def left_degrees(self):
        return np.array([len(a) for a in self.adj], dtype=np.int64)

    def to_json(self):
        """Edge-list dump with 1-based vertex labels."""
        return json.dumps({"n_left": self.n_left, "n_right": self.n_right,
                           "edges": sorted([u + 1, v + 1] for u, v in self.edges)})


@dataclass(frozen=True)
class Matching:
    """An ``r``-matching: left degree at most ``r``, right degree at most 1."""

    pairs: frozenset
    r: int = 1

    def __len__(self):
        return len(self.pairs)

    def validate(self, graph: BipartiteGraph):
        left = np.zeros(graph.n_left, dtype=np.int64)
        right = np.zeros(graph.n_right, dtype=np.int64)
        for u, v in self.pairs:
            if (u, v) not in graph.edges:
                raise AssertionError(f"({u}, {v}) is not an edge of the graph")
            left[u] += 1
            right[v] += 1
        if left.size and left.max() > self.r:
            raise AssertionError(f"a left vertex exceeds capacity {self.r}")
        if right.size and right.max() > 1:
            raise AssertionError("a right vertex is matched twice")
        return self

    def is_right_saturated(self, graph: BipartiteGraph):
        return len({v for _, v in self.pairs}) == graph.n_right

    def right_to_left(self, n_right):
        out = np.full(n_right, -1, dtype=np.int64)
        for u, v in self.pairs:
            out[v] = u
        return out


def _hopcroft_karp(n_left, n_right, adj):
    """Return ``pair_left`` for a maximum matching on the given adjacency."""
    pair_u = [-1] * n_left
    pair_v = [-1] * n_right
    dist = [_INF] * n_left

    def bfs():
        q = deque()
        for u in range(n_left):
            if pair_u[u] == -1:
                dist[u] = 0
                q.append(u)
            else:
                dist[u] = _INF
        found = False
        while q:
            u = q.popleft()
            for v in adj[u]:
                w = pair_v[v]
                if w == -1:
                    found = True
                elif dist[w] == _INF:
                    dist[w] = dist[u] + 1
                    q.append(w)
        return found

    def augment(root, it):
        stack = [root]
        via = []
        while stack:
            u = stack[-1]
            nbrs = adj[u]
            if it[u] < len(nbrs):
                v = nbrs[it[u]]
                it[u] += 1
                w = pair_v[v]
                if w == -1:
                    via.append(v)
                    for x, y in zip(stack, via):
                        pair_u[x] = y
                        pair_v[y] = x
                    return True
                if dist[w] == dist[u] + 1:
                    stack.append(w)
                    via.append(v)
            else:
                dist[u] = _INF
                stack.pop()
                if via:
                    via.pop()
        return False

    while bfs():
        it = [0] * n_left
        for u in range(n_left):
            if pair_u[u] == -1:
                augment(u, it)
    return pair_u


def max_matching(g: BipartiteGraph) -> Matching:
    """Maximum-cardinality matching (Hopcroft-Karp, lowest-index first)."""
    pair_u = _hopcroft_karp(g.n_left, g.n_right, g.adj)
    pairs = frozenset((u, v) for u, v in enumerate(pair_u) if v != -1)
    return Matching(pairs, 1).validate(g)


def right_saturated_2_matching(g: BipartiteGraph) -> Matching | None:
    """A 2-matching covering every right vertex, or ``None``.

    Each left vertex is split into two copies with identical neighbourhoods
    and a maximum matching is computed on the split graph.
    """
    if g.n_right == 0:
        return Matching(frozenset(), 2)
    if g.n_right > 2 * g.n_left:
        return None
    doubled = tuple(g.adj[u // 2] for u in range(2 * g.n_left))
    pair_u = _hopcroft_karp(2 * g.n_left, g.n_right, doubled)
    pairs = frozenset((u // 2, v) for u, v in enumerate(pair_u) if v != -1)
    if len(pairs) < g.n_right:
        return None
    return Matching(pairs, 2).validate(g)


def right_saturated_matching_via_unique_left_degree(g: BipartiteGraph) -> Matching | None:
    """Right-saturated matching in a graph whose left degrees are all at most 1.

    With left degree <= 1 such a matching exists iff no right vertex is
    isolated; each right vertex takes its lowest-index neighbour.
    """
    if np.any(g.left_degrees() > 1):
        raise ValueError("every left vertex must have degree at most 1")
    owner = [-1] * g.n_right
    for u, v in sorted(g.edges):
        if owner[v] == -1:
            owner[v] = u
    if any(o == -1 for o in owner):
        return None
    return Matching(frozenset((u, v) for v, u in enumerate(owner)), 1).validate(g)


def min_cost_perfect_matching(cost) -> np.ndarray:
    """Permutation ``perm`` minimising ``sum(cost[i, perm[i]])``."""
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost grid must be square, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost grid must be finite")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=np.int64)
    perm[rows] = cols
    return perm


def min_cost_left_saturating_matching(cost) -> np.ndarray:
    """For an ``n x k`` grid with ``n <= k``: ``cols[i]`` is row ``i``'s partner in a
    minimum-cost matching that covers every row."""
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] > cost.shape[1]:
        raise ValueError(f"need at least as many columns as rows, got shape {cost.shape}")
    rows, cols = linear_sum_assignment(cost)
    out = np.empty(cost.shape[0], dtype=np.int64)
    out[rows] = cols
    return out


def sample_random_bipartite(n_left: int, n_right: int, p: float, seed: int = 0) -> BipartiteGraph:
    """Draw from G(n_left, n_right, p); each edge is an independent coin."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability {p!r} outside [0, 1]")
    if n_left < 0 or n_right < 0:
        raise ValueError("vertex counts must be nonnegative")
    u = uniform_open01(seed, np.arange(n_left)[:, None], np.arange(n_right)[None, :])
    ls, rs = np.nonzero(u < p)
    return BipartiteGraph(n_left, n_right, frozenset(zip(ls.tolist(), rs.tolist())))
