"""Chore allocation algorithms and the case-analysis dispatchers.

Every allocator takes an ``n x m`` disutility grid (a ``DisutilityMatrix`` or
anything array-like) and returns an :class:`AllocatorOutcome`, except
:func:`cost_minimizing`, which cannot fail and returns the allocation itself.
An outcome without an allocation is the "no allocation found" answer; there
are no internal retries.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import Allocation, _cost_matrix, _envy_stats, _prop_violation
from .matching import (
    BipartiteGraph,
    min_cost_perfect_matching,
    min_cost_left_saturating_matching,
    right_saturated_2_matching,
    right_saturated_matching_via_unique_left_degree,
)
from .validation import check_disutility

COST_MIN = "CostMin"
ALG_DIV = "AlgDiv"
TWO_STAGE = "TwoStage"
PROP_SMALL = "PropSmall"
PROP_MEDIUM = "PropMedium"
DISPATCHER = "Dispatcher"

DEFAULT_BIG_M_C = 10.0
DEFAULT_GROUP_CONSTANT = 40.0
DEFAULT_MAX_PASSES = 25


@dataclass(frozen=True)
class TwoStageParams:
    tau: float
    r: int
    xi: float
    gap_set: tuple
    leftover: tuple


@dataclass
class AllocatorOutcome:
    allocation: Allocation | None
    algorithm: str
    diagnostics: dict = field(default_factory=dict)
    params: TwoStageParams | None = None
    graphs: list = field(default_factory=list, repr=False)

    @property
    def found(self) -> bool:
        return self.allocation is not None

    def to_dict(self):
        out = {
            "algorithm": self.algorithm,
            "found": self.found,
            "allocation": None if self.allocation is None else self.allocation.to_dict(),
            "diagnostics": dict(self.diagnostics),
        }
        if self.params is not None:
            p = self.params
            out["params"] = {"tau": p.tau, "r": p.r, "xi": p.xi,
                             "gap_set": [i + 1 for i in p.gap_set],
                             "leftover": [j + 1 for j in p.leftover]}
        return out


def cost_minimizing(matrix) -> Allocation:
    """Give every chore to the agent who minds it least (lowest index on ties)."""
    D = check_disutility(matrix)
    return Allocation(D.shape[0], np.argmin(D, axis=0))


def _cost_minimizing_outcome(matrix):
    D = check_disutility(matrix)
    t0 = time.perf_counter_ns()
    alloc = cost_minimizing(D)
    return AllocatorOutcome(alloc, COST_MIN, {
        "social_cost": float(D.min(axis=0).sum()),
        "runtime_ns": time.perf_counter_ns() - t0,
    })


def _forbidden_edges(D, blk, labels, n):
    """Mask ``forb[k, t]``: handing chore ``blk[t]`` to agent ``k`` in place of
    its current chore of this block would make some other agent's current own
    cost exceed her cost for ``k``'s bundle."""
    C = _cost_matrix(D, labels, n)
    own = np.diag(C).copy()
    held = np.empty(n, dtype=np.int64)
    held[labels[blk]] = blk
    # P[i, k] = d_i(A_k) without k's chore from this block
    P = C - D[:, held]
    Db = D[:, blk]
    forb = np.zeros((n, len(blk)), dtype=bool)
    for k in range(n):
        slack = own[:, None] - P[:, k][:, None]
        hit = Db < slack
        hit[k, :] = False
        forb[k] = hit.any(axis=0)
    return forb


def _divisible_labels(D, max_passes):
    n, m = D.shape
    r = m // n
    labels = np.empty(m, dtype=np.int64)
    free = np.ones(m, dtype=bool)
    blocks = []
    for _ in range(r):
        # each round: every agent takes one of the still-free chores, at minimum total cost
        cols = np.flatnonzero(free)
        chosen = cols[min_cost_left_saturating_matching(D[:, cols])]
        labels[chosen] = np.arange(n)
        free[chosen] = False
        blocks.append(np.sort(chosen))
    penalty = float(n + 1)
    passes = 0
    while passes < max_passes and _envy_stats(D, labels, n)[0] > 0.0:
        passes += 1
        changed = False
        for blk in blocks:
            forb = _forbidden_edges(D, blk, labels, n)
            perm = min_cost_perfect_matching(D[:, blk] + penalty * forb)
            new = np.empty(n, dtype=np.int64)
            new[perm] = np.arange(n)
            if np.any(labels[blk] != new):
                changed = True
            labels[blk] = new
        if not changed:
            break
    return labels, passes


def alg_div(matrix, *, max_passes: int = DEFAULT_MAX_PASSES) -> AllocatorOutcome:
    """Balanced allocation for ``m = r * n`` chores, ``r >= 2``.

    In each of ``r`` rounds every agent takes one still-unallocated chore,
    chosen by a minimum-cost matching of agents to the remaining chores, so
    every agent receives exactly ``r`` chores. While the result has envy, the
    chores of each round are re-matched in turn with a penalty on every edge that would let some other agent's
    current own cost exceed her cost for the receiving bundle. The allocation
    is returned whether or not it ends up envy-free; ``diagnostics`` reports
    the verdict.
    """
    D = check_disutility(matrix)
    n, m = D.shape
    if m % n != 0 or m // n < 2:
        raise ValueError(f"alg_div needs m = r*n with r >= 2, got n={n}, m={m}")
    r = m // n
    t0 = time.perf_counter_ns()
    labels, passes = _divisible_labels(D, max_passes)
    alloc = Allocation(n, labels)
    max_envy, own = _envy_stats(D, labels, n)
    return AllocatorOutcome(alloc, ALG_DIV, {
        "r": r,
        "passes": passes,
        "envy_free": max_envy == 0.0,
        "max_envy": max_envy,
        "max_own_cost": float(own.max()),
        "xi": r * math.log(r * n) / n,
        "runtime_ns": time.perf_counter_ns() - t0,
    })


def default_tau(n: int, beta: float = 1.0) -> float:
    return 3.0 * math.log(n) / (beta * n)


def two_stage(matrix, tau_override: float | None = None, *, beta: float = 1.0,
              max_passes: int = DEFAULT_MAX_PASSES) -> AllocatorOutcome:
    """Two-stage matching allocation for ``m >= 2n`` chores.

    Stage one runs :func:`alg_div` on the first ``r*n`` chores. Agents whose
    own bundle undercuts every other bundle (in their eyes) by at least
    ``2*tau`` form the gap set; the leftover chores go to them through a
    right-saturated 2-matching on edges with cost at most ``tau``. Returns an
    empty outcome if no such 2-matching exists.
    """
    D = check_disutility(matrix)
    n, m = D.shape
    if m < 2 * n:
        raise ValueError(f"two_stage needs m >= 2n, got n={n}, m={m}")
    t0 = time.perf_counter_ns()
    tau = default_tau(n, beta) if tau_override is None else float(tau_override)
    r = m // n
    first = r * n
    stage1 = alg_div(D[:, :first], max_passes=max_passes)
    labels0 = stage1.allocation.labels
    C0 = _cost_matrix(D[:, :first], labels0, n)
    own0 = np.diag(C0).copy()
    others = C0.copy()
    np.fill_diagonal(others, np.inf)
    gap_set = np.flatnonzero(own0 <= others.min(axis=1) - 2.0 * tau)
    leftover = np.arange(first, m)
    params = TwoStageParams(tau=tau, r=r, xi=r * math.log(r * n) / n,
                            gap_set=tuple(gap_set.tolist()), leftover=tuple(leftover.tolist()))

    sub = D[np.ix_(gap_set, leftover)] <= tau
    rows, cols = np.nonzero(sub)
    g = BipartiteGraph(len(gap_set), len(leftover), frozenset(zip(rows.tolist(), cols.tolist())))
    matching = right_saturated_2_matching(g)
    diagnostics = {
        "tau": tau,
        "r": r,
        "xi": params.xi,
        "gap_set_size": len(gap_set),
        "leftover_size": len(leftover),
        "edges": len(g.edges),
        "stage1_envy_free": stage1.diagnostics["envy_free"],
        "stage1_passes": stage1.diagnostics["passes"],
        "matching_found": matching is not None,
    }
    if matching is None:
        diagnostics["runtime_ns"] = time.perf_counter_ns() - t0
        return AllocatorOutcome(None, TWO_STAGE, diagnostics, params, [g])
    labels = np.empty(m, dtype=np.int64)
    labels[:first] = labels0
    owner = matching.right_to_left(len(leftover))
    labels[first:] = gap_set[owner]
    alloc = Allocation(n, labels)
    diagnostics["envy_free"] = _envy_stats(D, labels, n)[0] == 0.0
    diagnostics["runtime_ns"] = time.perf_counter_ns() - t0
    return AllocatorOutcome(alloc, TWO_STAGE, diagnostics, params, [g])


def _prop_small_labels(D, share):
    """Labels for the favourite-chore matching, or ``None``.

    ``share[i]`` is the per-agent proportional threshold.
    """
    n, m = D.shape
    fav = np.argmin(D, axis=1)
    ok = D[np.arange(n), fav] <= share
    agents = np.flatnonzero(ok)
    g = BipartiteGraph(n, m, frozenset(zip(agents.tolist(), fav[agents].tolist())))
    matching = right_saturated_matching_via_unique_left_degree(g)
    if matching is None:
        return None, g
    return matching.right_to_left(m), g


def prop_small(matrix) -> AllocatorOutcome:
    """Each agent may take only her favourite chore, and only if it costs her
    at most ``d_i(M)/n``; succeed iff every chore is wanted by someone."""
    D = check_disutility(matrix)
    n, m = D.shape
    t0 = time.perf_counter_ns()
    labels, g = _prop_small_labels(D, D.sum(axis=1) / n)
    diagnostics = {"edges": len(g.edges), "matching_found": labels is not None}
    alloc = None
    if labels is not None:
        alloc = Allocation(n, labels)
        diagnostics["proportional"] = _prop_violation(D, labels, n) == 0.0
    diagnostics["runtime_ns"] = time.perf_counter_ns() - t0
    return AllocatorOutcome(alloc, PROP_SMALL, diagnostics, graphs=[g])


def small_m_limit(n: int, constant: float = DEFAULT_GROUP_CONSTANT) -> int:
    """Largest integer ``m0 >= 1`` with ``m0 * log(m0) <= n / constant``."""
    bound = n / constant
    m0 = 1
    while (m0 + 1) * math.log(m0 + 1) <= bound:
        m0 += 1
    return m0


def medium_groups(n: int, m: int, constant: float = DEFAULT_GROUP_CONSTANT):
    """Split chores ``0..m-1`` into contiguous groups for the medium-m scheme.

    Uses ``r = ceil(n / m0)`` groups whose sizes differ by at most one; a
    single group when ``m <= m0``.
    """
    m0 = small_m_limit(n, constant)
    r = 1 if m <= m0 else math.ceil(n / m0)
    return m0, [g for g in np.array_split(np.arange(m), r) if g.size]


def prop_medium(matrix, *, group_constant: float = DEFAULT_GROUP_CONSTANT) -> AllocatorOutcome:
    """Run :func:`prop_small` on each chore group and take the union.

    Each group is judged against its own total, ``d_i(M^k)/n``; summing the
    per-group guarantees gives proportionality for the whole set.
    """
    D = check_disutility(matrix)
    n, m = D.shape
    t0 = time.perf_counter_ns()
    m0, groups = medium_groups(n, m, group_constant)
    labels = np.empty(m, dtype=np.int64)
    flags = []
    graphs = []
    for g in groups:
        sub = D[:, g]
        lab, graph = _prop_small_labels(sub, sub.sum(axis=1) / n)
        graphs.append(graph)
        flags.append(lab is not None)
        if lab is not None:
            labels[g] = lab
    sizes = [len(g) for g in groups]
    diagnostics = {
        "m0": m0,
        "groups": len(groups),
        "min_group_size": min(sizes),
        "max_group_size": max(sizes),
        "groups_ok": sum(flags),
        "group_flags": flags,
    }
    alloc = None
    if all(flags):
        alloc = Allocation(n, labels)
        diagnostics["proportional"] = _prop_violation(D, labels, n) == 0.0
    diagnostics["runtime_ns"] = time.perf_counter_ns() - t0
    return AllocatorOutcome(alloc, PROP_MEDIUM, diagnostics, graphs=graphs)


def envy_free_route(n: int, m: int, big_m_c: float = DEFAULT_BIG_M_C) -> str:
    if m >= big_m_c * n * math.log(n):
        return "costmin"
    if m >= 2 * n and m % n == 0:
        return "algdiv"
    if m >= 2 * n:
        return "twostage"
    return "costmin"


def dispatch_envy_free(matrix, *, big_m_c: float = DEFAULT_BIG_M_C, tau: float | None = None,
                       beta: float = 1.0, max_passes: int = DEFAULT_MAX_PASSES) -> AllocatorOutcome:
    """Pick the envy-free algorithm for the size regime and verify its output."""
    D = check_disutility(matrix)
    n, m = D.shape
    route = envy_free_route(n, m, big_m_c)
    if route == "costmin":
        inner = _cost_minimizing_outcome(D)
    elif route == "algdiv":
        inner = alg_div(D, max_passes=max_passes)
    else:
        inner = two_stage(D, tau, beta=beta, max_passes=max_passes)
    diagnostics = {"route": route, **{k: v for k, v in inner.diagnostics.items()}}
    if inner.allocation is not None:
        diagnostics["envy_free"] = _envy_stats(D, inner.allocation.labels, n)[0] == 0.0
    else:
        diagnostics["envy_free"] = False
    return AllocatorOutcome(inner.allocation, DISPATCHER, diagnostics, inner.params, inner.graphs)


def proportional_route(n: int, m: int, constant: float = DEFAULT_GROUP_CONSTANT) -> str:
    if m * math.log(m) <= n / constant:
        return "propsmall"
    if m >= 2 * n:
        return "ef"
    return "propmedium"


def dispatch_proportional(matrix, *, big_m_c: float = DEFAULT_BIG_M_C,
                          group_constant: float = DEFAULT_GROUP_CONSTANT,
                          tau: float | None = None, beta: float = 1.0,
                          max_passes: int = DEFAULT_MAX_PASSES) -> AllocatorOutcome:
    """Pick the proportional route for the size regime, falling back through
    the other routes until one yields a verified proportional allocation."""
    D = check_disutility(matrix)
    n, m = D.shape
    primary = proportional_route(n, m, group_constant)
    order = [primary] + [r for r in ("propsmall", "propmedium", "ef") if r != primary]
    tried = []
    first_found = None
    for route in order:
        if route == "propsmall":
            out = prop_small(D)
        elif route == "propmedium":
            out = prop_medium(D, group_constant=group_constant)
        else:
            out = dispatch_envy_free(D, big_m_c=big_m_c, tau=tau, beta=beta, max_passes=max_passes)
        tried.append(route)
        if out.allocation is None:
            continue
        if first_found is None:
            first_found = (route, out)
        if _prop_violation(D, out.allocation.labels, n) == 0.0:
            return AllocatorOutcome(out.allocation, DISPATCHER, {
                "route": route, "primary_route": primary, "tried": tried, "proportional": True,
            }, out.params, out.graphs)
    if first_found is not None:
        route, out = first_found
        return AllocatorOutcome(out.allocation, DISPATCHER, {
            "route": route, "primary_route": primary, "tried": tried, "proportional": False,
        }, out.params, out.graphs)
    return AllocatorOutcome(None, DISPATCHER, {
        "route": None, "primary_route": primary, "tried": tried, "proportional": False,
    })
