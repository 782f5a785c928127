"""Input validation helpers shared by the functional API and the estimators."""

import numpy as np
from sklearn.utils import check_array

from .instance import DisutilityMatrix


def check_disutility(X, *, min_agents=1, min_chores=1):
    """Validate a disutility grid and return it as a float64 ``ndarray``.

    Accepts a :class:`DisutilityMatrix` or anything array-like with one row
    per agent and one column per chore. All entries must lie in [0, 1].
    """
    if isinstance(X, DisutilityMatrix):
        D = X.costs
    else:
        D = check_array(X, dtype=np.float64, ensure_min_samples=1, ensure_min_features=1)
        if D.min() < 0.0 or D.max() > 1.0:
            raise ValueError("every disutility must lie in [0, 1]")
    n, m = D.shape
    if n < min_agents:
        raise ValueError(f"need at least {min_agents} agents, got {n}")
    if m < min_chores:
        raise ValueError(f"need at least {min_chores} chores, got {m}")
    return D


def check_agent(agent, n):
    if int(agent) != agent or not 0 <= agent < n:
        raise IndexError(f"agent index {agent} out of range for n={n}")
    return int(agent)


def check_chores(bundle, m):
    idx = np.asarray(sorted(bundle), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= m):
        raise IndexError(f"chore index out of range for m={m}")
    return idx
