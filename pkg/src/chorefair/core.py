"""Allocations and fairness predicates.

All comparisons are exact: ``d_i(A_i) <= d_i(A_k)`` is evaluated on the
floating sums with no tolerance. ``FairnessReport`` carries the violation
magnitudes for callers who want one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .validation import check_agent, check_chores, check_disutility

MMS_GUARD = 10**7


@dataclass(frozen=True, eq=False)
class Allocation:
    """A partition of chores ``0..m-1`` among agents ``0..n-1``.

    Stored as ``labels``: ``labels[j]`` is the agent holding chore ``j``.
    Empty bundles are allowed.
    """

    n: int
    labels: np.ndarray

    def __post_init__(self):
        lab = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
        if self.n < 1:
            raise ValueError("an allocation needs at least one agent")
        if lab.size and (lab.min() < 0 or lab.max() >= self.n):
            raise ValueError("every chore must be assigned to an agent in range")
        lab.setflags(write=False)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "labels", lab)

    @property
    def m(self) -> int:
        return self.labels.size

    @classmethod
    def from_bundles(cls, bundles, m=None):
        bundles = [list(b) for b in bundles]
        flat = [j for b in bundles for j in b]
        if m is None:
            m = len(flat)
        if sorted(flat) != list(range(m)):
            raise ValueError("bundles must be disjoint and cover every chore exactly once")
        labels = np.empty(m, dtype=np.int64)
        for i, b in enumerate(bundles):
            labels[b] = i
        return cls(len(bundles), labels)

    @property
    def bundles(self):
        return tuple(frozenset(np.flatnonzero(self.labels == i).tolist()) for i in range(self.n))

    def sizes(self):
        return np.bincount(self.labels, minlength=self.n)

    def __eq__(self, other):
        if not isinstance(other, Allocation):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.labels, other.labels)

    __hash__ = None

    def __repr__(self):
        inner = ", ".join("{" + ",".join(str(j) for j in sorted(b)) + "}" for b in self.bundles)
        return f"Allocation({inner})"

    def to_dict(self):
        """JSON form with 1-based chore indices."""
        return {"bundles": [[j + 1 for j in sorted(b)] for b in self.bundles]}

    @classmethod
    def from_dict(cls, data, m=None):
        return cls.from_bundles([[j - 1 for j in b] for b in data["bundles"]], m=m)

    @classmethod
    def load(cls, path, m=None):
        return cls.from_dict(json.loads(Path(path).read_text()), m=m)


@dataclass(frozen=True)
class FairnessReport:
    envy_free: bool
    proportional: bool
    efx: bool
    mms_fair: bool | None
    max_envy: float
    prop_violation: float

    def to_dict(self):
        return asdict(self)


def _check_pair(matrix, alloc):
    D = check_disutility(matrix)
    if not isinstance(alloc, Allocation):
        raise TypeError("alloc must be an Allocation")
    if D.shape != (alloc.n, alloc.m):
        raise ValueError(f"allocation is for (n={alloc.n}, m={alloc.m}) but matrix has shape {D.shape}")
    return D


def bundle_disutility(matrix, agent, bundle) -> float:
    """Additive cost of ``bundle`` for ``agent``; the empty bundle costs 0."""
    D = check_disutility(matrix)
    i = check_agent(agent, D.shape[0])
    idx = check_chores(bundle, D.shape[1])
    return float(D[i, idx].sum()) if idx.size else 0.0


def own_costs(D, labels, n):
    """``d_i(A_i)`` for every agent."""
    out = np.zeros(n)
    np.add.at(out, labels, D[labels, np.arange(labels.size)])
    return out


def bundle_cost_matrix(matrix, alloc: Allocation) -> np.ndarray:
    """``C[i, k] = d_i(A_k)`` for all agents ``i`` and bundles ``k``."""
    D = _check_pair(matrix, alloc)
    return _cost_matrix(D, alloc.labels, alloc.n)


def _cost_matrix(D, labels, n):
    C = np.zeros((D.shape[0], n))
    for k in np.unique(labels):
        C[:, k] = D[:, labels == k].sum(axis=1)
    return C


def _envy_stats(D, labels, n):
    """Return (max_envy, own) where max_envy is clipped below at 0."""
    C_own = np.zeros(n)
    sizes = np.bincount(labels, minlength=n)
    if np.any(sizes == 0):
        # costs are nonnegative, so an empty bundle is the cheapest one for everybody
        for k in np.flatnonzero(sizes):
            C_own[k] = D[k, labels == k].sum()
        return max(float(C_own.max()), 0.0), C_own
    C = _cost_matrix(D, labels, n)
    own = np.diag(C).copy()
    return max(float((own[:, None] - C).max()), 0.0), own


def is_envy_free(matrix, alloc: Allocation) -> bool:
    D = _check_pair(matrix, alloc)
    return _envy_stats(D, alloc.labels, alloc.n)[0] == 0.0


def _prop_violation(D, labels, n):
    own = np.zeros(n)
    np.add.at(own, labels, D[labels, np.arange(labels.size)])
    share = D.sum(axis=1) / n
    return max(float((own - share).max()), 0.0)


def is_proportional(matrix, alloc: Allocation) -> bool:
    D = _check_pair(matrix, alloc)
    return _prop_violation(D, alloc.labels, alloc.n) == 0.0


def _efx_ok(D, labels, n):
    sizes = np.bincount(labels, minlength=n)
    own = np.zeros(n)
    cheapest = np.full(n, np.inf)
    cols = np.arange(labels.size)
    vals = D[labels, cols]
    np.add.at(own, labels, vals)
    np.minimum.at(cheapest, labels, vals)
    relaxed = np.where(sizes > 0, own - cheapest, 0.0)
    if np.any(sizes == 0):
        return bool(np.all(relaxed <= 0.0))
    C = _cost_matrix(D, labels, n)
    np.fill_diagonal(C, np.inf)
    return bool(np.all(relaxed[:, None] <= C))


def is_efx(matrix, alloc: Allocation) -> bool:
    """EFX for chores: dropping any one of your own chores removes all envy."""
    D = _check_pair(matrix, alloc)
    return _efx_ok(D, alloc.labels, alloc.n)


def _min_max_partition(costs, n):
    """Smallest achievable largest bin when splitting ``costs`` into ``n`` bins."""
    items = sorted((float(c) for c in costs), reverse=True)
    if not items:
        return 0.0
    if n >= len(items):
        return items[0]
    # greedy LPT gives the initial incumbent
    bins = [0.0] * n
    for c in items:
        k = min(range(n), key=bins.__getitem__)
        bins[k] += c
    best = max(bins)
    lower = max(items[0], sum(items) / n)
    loads = [0.0] * n

    def dfs(t, current_max):
        nonlocal best
        if best <= lower:
            return
        if t == len(items):
            best = min(best, current_max)
            return
        c = items[t]
        seen = set()
        for k in range(n):
            load = loads[k]
            if load in seen:
                continue
            seen.add(load)
            new = load + c
            if new >= best:
                continue
            loads[k] = new
            dfs(t + 1, max(current_max, new))
            loads[k] = load

    dfs(0, 0.0)
    return best


def mms_share(matrix, agent) -> float:
    """Exact maximin share of ``agent`` for chores (min over partitions of the max bundle)."""
    D = check_disutility(matrix)
    n, m = D.shape
    i = check_agent(agent, n)
    if n**m > MMS_GUARD:
        raise ValueError(f"instance too large for exact MMS: n^m = {n}^{m} > {MMS_GUARD}")
    return _min_max_partition(D[i], n)


def is_mms_fair(matrix, alloc: Allocation) -> bool:
    D = _check_pair(matrix, alloc)
    own = own_costs(D, alloc.labels, alloc.n)
    return all(own[i] <= mms_share(D, i) for i in range(alloc.n))


def fairness_report(matrix, alloc: Allocation, *, mms: bool = True) -> FairnessReport:
    D = _check_pair(matrix, alloc)
    n, m = D.shape
    max_envy, _ = _envy_stats(D, alloc.labels, n)
    violation = _prop_violation(D, alloc.labels, n)
    mms_fair = None
    if mms and n**m <= MMS_GUARD:
        mms_fair = is_mms_fair(D, alloc)
    return FairnessReport(
        envy_free=max_envy == 0.0,
        proportional=violation == 0.0,
        efx=_efx_ok(D, alloc.labels, n),
        mms_fair=mms_fair,
        max_envy=max_envy,
        prop_violation=violation,
    )
