"""Exact existence checks for envy-free and proportional allocations.

Assignments are explored as a mixed-radix counter: chore ``j`` is digit ``j``
(chore 0 most significant) and its value is the receiving agent. Depth-first
search visits them in that order and cuts a branch only when no completion
can satisfy the notion, so the first witness found is the lexicographically
smallest one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Allocation, _envy_stats, _prop_violation
from .validation import check_disutility

ORACLE_GUARD = 10**8
# pruning only fires on clear violations; leaves use the exact predicates
_SLACK = 1e-9


@dataclass(frozen=True)
class OracleResult:
    exists: bool
    witness: Allocation | None = None

    def __bool__(self):
        return self.exists

    def to_dict(self):
        out = {"exists": self.exists}
        if self.witness is not None:
            out["witness"] = self.witness.to_dict()
        return out


def _guard(D):
    n, m = D.shape
    if n**m > ORACLE_GUARD:
        raise ValueError(f"instance too large for exhaustive search: {n}^{m} > {ORACLE_GUARD}")


def _search_envy_free(D):
    n, m = D.shape
    rows = D.tolist()
    # rem[t][i] = d_i({t, ..., m-1})
    rem = np.concatenate([np.cumsum(D[:, ::-1], axis=1)[:, ::-1], np.zeros((n, 1))], axis=1).T.tolist()
    # envy-freeness implies proportionality, so an own bundle above d_i(M)/n is dead
    share = (D.sum(axis=1) / n + _SLACK).tolist()
    P = [[0.0] * n for _ in range(n)]
    sizes = [0] * n
    labels = np.zeros(m, dtype=np.int64)
    agents = range(n)

    def viable(t):
        left = rem[t]
        if sizes.count(0) > m - t:
            # some bundle stays empty, and it is the cheapest bundle for everyone
            if any(P[i][i] > 0.0 for i in agents):
                return False
        for i in agents:
            Pi = P[i]
            own = Pi[i] - left[i] - _SLACK
            if own > 0.0:
                for k in agents:
                    if own > Pi[k]:
                        return False
        return True

    def dfs(t):
        if t == m:
            return _envy_stats(D, labels, n)[0] == 0.0
        col = [row[t] for row in rows]
        for a in agents:
            saved = [P[i][a] for i in agents]
            for i in agents:
                P[i][a] += col[i]
            sizes[a] += 1
            labels[t] = a
            if P[a][a] <= share[a] and viable(t + 1) and dfs(t + 1):
                return True
            for i in agents:
                P[i][a] = saved[i]
            sizes[a] -= 1
        return False

    return labels.copy() if dfs(0) else None


def _search_proportional(D):
    n, m = D.shape
    rows = D.tolist()
    share = (D.sum(axis=1) / n + _SLACK).tolist()
    own = [0.0] * n
    labels = np.zeros(m, dtype=np.int64)

    def dfs(t):
        if t == m:
            return _prop_violation(D, labels, n) == 0.0
        for a in range(n):
            saved = own[a]
            own[a] = saved + rows[a][t]
            if own[a] <= share[a]:
                labels[t] = a
                if dfs(t + 1):
                    return True
            own[a] = saved
        return False

    return labels.copy() if dfs(0) else None


def exists_envy_free(matrix) -> OracleResult:
    """Decide whether any envy-free allocation exists; return the first witness."""
    D = check_disutility(matrix)
    _guard(D)
    labels = _search_envy_free(D)
    if labels is None:
        return OracleResult(False)
    return OracleResult(True, Allocation(D.shape[0], labels))


def exists_proportional(matrix) -> OracleResult:
    """Decide whether any proportional allocation exists; return the first witness."""
    D = check_disutility(matrix)
    _guard(D)
    labels = _search_proportional(D)
    if labels is None:
        return OracleResult(False)
    return OracleResult(True, Allocation(D.shape[0], labels))


def iter_assignments(n, m):
    """All ``n**m`` label vectors in mixed-radix order, chore 0 most significant."""
    digits = [0] * m
    while True:
        yield list(digits)
        j = m - 1
        while j >= 0 and digits[j] == n - 1:
            digits[j] = 0
            j -= 1
        if j < 0:
            return
        digits[j] += 1
