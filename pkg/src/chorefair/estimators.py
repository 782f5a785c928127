"""scikit-learn style front-ends for the allocators.

An allocator is fitted on one instance: ``X`` is the ``n x m`` disutility
grid (rows are agents, columns are chores). After ``fit``, ``labels_[j]`` is
the agent holding chore ``j``, or ``-1`` everywhere when no allocation was
found, the same convention clustering estimators use for noise.

    >>> from chorefair.estimators import CostMinimizingAllocator
    >>> CostMinimizingAllocator().fit_predict([[0.1, 0.9], [0.9, 0.1]])
    array([0, 1])
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import allocators as _alg
from .core import _cost_matrix
from .validation import check_disutility


class BaseAllocator(BaseEstimator):
    """Common ``fit`` / ``fit_predict`` / ``transform`` plumbing.

    Subclasses implement ``_allocate(D)`` returning an ``AllocatorOutcome``
    and set ``notion`` to ``"ef"`` or ``"prop"``.
    """

    notion = "ef"

    def _allocate(self, D):
        raise NotImplementedError

    def fit(self, X, y=None):
        D = check_disutility(X)
        outcome = self._allocate(D)
        self.outcome_ = outcome
        self.allocation_ = outcome.allocation
        self.found_ = outcome.allocation is not None
        self.diagnostics_ = outcome.diagnostics
        self.n_agents_, self.n_chores_ = D.shape
        if self.found_:
            self.labels_ = np.asarray(outcome.allocation.labels).copy()
        else:
            self.labels_ = np.full(D.shape[1], -1, dtype=np.int64)
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_

    def transform(self, X):
        """Bundle cost matrix ``C[i, k] = d_i(A_k)`` of the fitted allocation under ``X``."""
        check_is_fitted(self, "labels_")
        D = check_disutility(X)
        if D.shape != (self.n_agents_, self.n_chores_):
            raise ValueError(f"X has shape {D.shape}, expected {(self.n_agents_, self.n_chores_)}")
        if not self.found_:
            raise ValueError("no allocation was found during fit")
        return _cost_matrix(D, self.labels_, self.n_agents_)


class CostMinimizingAllocator(BaseAllocator):
    """Each chore goes to the agent with the smallest disutility for it."""

    def _allocate(self, D):
        return _alg._cost_minimizing_outcome(D)


class DivisibleAllocator(BaseAllocator):
    """Balanced allocation for ``m = r * n``, ``r >= 2``.

    Parameters
    ----------
    max_passes : int, default=25
        Cap on envy-driven re-matching sweeps over the chore blocks.
    """

    def __init__(self, max_passes=_alg.DEFAULT_MAX_PASSES):
        self.max_passes = max_passes

    def _allocate(self, D):
        return _alg.alg_div(D, max_passes=self.max_passes)


class TwoStageAllocator(BaseAllocator):
    """Divisible allocation on the first ``r*n`` chores, then a 2-matching for the rest.

    Parameters
    ----------
    tau : float or None, default=None
        Edge threshold. ``None`` means ``3 log n / (beta n)``.
    beta : float, default=1.0
        Density upper bound of the disutility distribution, used for the
        default ``tau``.
    max_passes : int, default=25
        Passed on to the first stage.
    """

    def __init__(self, tau=None, beta=1.0, max_passes=_alg.DEFAULT_MAX_PASSES):
        self.tau = tau
        self.beta = beta
        self.max_passes = max_passes

    def _allocate(self, D):
        return _alg.two_stage(D, self.tau, beta=self.beta, max_passes=self.max_passes)


class PropSmallAllocator(BaseAllocator):
    """Favourite-chore matching; every agent gets at most one chore."""

    notion = "prop"

    def _allocate(self, D):
        return _alg.prop_small(D)


class PropMediumAllocator(BaseAllocator):
    """Favourite-chore matching run separately on contiguous chore groups.

    Parameters
    ----------
    group_constant : float, default=40.0
        ``m0`` is the largest integer with ``m0 log m0 <= n / group_constant``.
    """

    notion = "prop"

    def __init__(self, group_constant=_alg.DEFAULT_GROUP_CONSTANT):
        self.group_constant = group_constant

    def _allocate(self, D):
        return _alg.prop_medium(D, group_constant=self.group_constant)


class EnvyFreeAllocator(BaseAllocator):
    """Regime dispatcher for envy-freeness; the verdict is in ``diagnostics_``.

    Parameters
    ----------
    big_m_c : float, default=10.0
        Cost minimisation is used once ``m >= big_m_c * n * log n``.
    tau, beta, max_passes
        Forwarded to the two-stage and divisible routes.
    """

    def __init__(self, big_m_c=_alg.DEFAULT_BIG_M_C, tau=None, beta=1.0,
                 max_passes=_alg.DEFAULT_MAX_PASSES):
        self.big_m_c = big_m_c
        self.tau = tau
        self.beta = beta
        self.max_passes = max_passes

    def _allocate(self, D):
        return _alg.dispatch_envy_free(D, big_m_c=self.big_m_c, tau=self.tau,
                                       beta=self.beta, max_passes=self.max_passes)


class ProportionalAllocator(BaseAllocator):
    """Regime dispatcher for proportionality with fall-back routes."""

    notion = "prop"

    def __init__(self, big_m_c=_alg.DEFAULT_BIG_M_C, group_constant=_alg.DEFAULT_GROUP_CONSTANT,
                 tau=None, beta=1.0, max_passes=_alg.DEFAULT_MAX_PASSES):
        self.big_m_c = big_m_c
        self.group_constant = group_constant
        self.tau = tau
        self.beta = beta
        self.max_passes = max_passes

    def _allocate(self, D):
        return _alg.dispatch_proportional(D, big_m_c=self.big_m_c, group_constant=self.group_constant,
                                          tau=self.tau, beta=self.beta, max_passes=self.max_passes)


ALLOCATORS = {
    "costmin": CostMinimizingAllocator,
    "algdiv": DivisibleAllocator,
    "twostage": TwoStageAllocator,
    "propsmall": PropSmallAllocator,
    "propmedium": PropMediumAllocator,
    "ef": EnvyFreeAllocator,
    "prop": ProportionalAllocator,
}


def make_allocator(name, **params):
    """Build the allocator registered as ``name``, ignoring parameters it does not take."""
    try:
        cls = ALLOCATORS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALLOCATORS)}") from None
    est = cls()
    accepted = est.get_params()
    return est.set_params(**{k: v for k, v in params.items() if k in accepted and v is not None})
