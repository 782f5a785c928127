"""Closed forms, non-existence certificates and bound evaluators.

``T`` throughout is the number of repeated favourite chores: chores that are
the unique cheapest chore of two or more agents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import derive_seeds
from .instance import DistributionSpec, sample_batch
from .validation import check_disutility

REPEATED_FAVORITES = "RepeatedFavorites"
UNASSIGNABLE_CHORE = "UnassignableChore"
NO_CERTIFICATE = "None"


@dataclass(frozen=True)
class NonExistenceCertificate:
    kind: str = NO_CERTIFICATE
    T: int | None = None
    chore: int | None = None

    @property
    def fired(self) -> bool:
        return self.kind != NO_CERTIFICATE

    def to_dict(self):
        return {"kind": self.kind, "T": self.T,
                "chore": None if self.chore is None else self.chore + 1}


def favorite_chores(matrix) -> np.ndarray:
    """Each agent's cheapest chore (lowest index on ties)."""
    return np.argmin(check_disutility(matrix), axis=1)


def _repeated(fav, m):
    return int(np.count_nonzero(np.bincount(fav, minlength=m) > 1))


def count_repeated_favorites(matrix) -> int:
    D = check_disutility(matrix)
    return _repeated(np.argmin(D, axis=1), D.shape[1])


def repeated_favorites_batch(costs: np.ndarray) -> np.ndarray:
    """``T`` for every instance in a ``(B, n, m)`` stack."""
    B, _, m = costs.shape
    fav = np.argmin(costs, axis=2)
    counts = np.zeros((B, m), dtype=np.int64)
    np.add.at(counts, (np.arange(B)[:, None], fav), 1)
    return np.count_nonzero(counts > 1, axis=1)


def _unique_favorites(D):
    part = np.partition(D, 1, axis=1) if D.shape[1] > 1 else None
    return part is None or bool(np.all(part[:, 0] < part[:, 1]))


def ef_nonexistence_certificate(matrix) -> NonExistenceCertificate:
    """Fires when ``T > 2(m - n)``: then no envy-free allocation exists.

    The argument needs strictly positive costs and a unique favourite per
    agent; instances without both never get a certificate.
    """
    D = check_disutility(matrix)
    n, m = D.shape
    T = _repeated(np.argmin(D, axis=1), m)
    if D.min() > 0.0 and _unique_favorites(D) and T > 2 * (m - n):
        return NonExistenceCertificate(REPEATED_FAVORITES, T=T)
    return NonExistenceCertificate(NO_CERTIFICATE, T=T)


def prop_nonexistence_certificate(matrix) -> NonExistenceCertificate:
    """Fires on the first chore that costs every agent more than her share ``d_i(M)/n``."""
    D = check_disutility(matrix)
    n = D.shape[0]
    share = D.sum(axis=1) / n
    hits = np.flatnonzero(np.all(D > share[:, None], axis=0))
    if hits.size:
        return NonExistenceCertificate(UNASSIGNABLE_CHORE, chore=int(hits[0]))
    return NonExistenceCertificate(NO_CERTIFICATE)


def expected_repeated_favorites(n: int, m: int) -> float:
    """Exact ``E[T]`` when favourites are i.i.d. uniform over the ``m`` chores."""
    if n < 1 or m < 1:
        raise ValueError("need n >= 1 and m >= 1")
    return m * (1.0 - (1.0 + (n - 1) / m) * (1.0 - 1.0 / m) ** (n - 1))


def expected_repeated_favorites_lower_bound(n: int, m: int) -> float:
    """The exponential lower bound on ``E[T]`` obtained from ``1 + x <= e^x``."""
    x = (n - 1) / m
    return m * (1.0 - (1.0 + x) * math.exp(-x))


def nu_equation(x: float) -> float:
    """``2 - x(1 + (1 + 1/x) e^{-1/x})``; strictly decreasing on ``(0, inf)``."""
    return 2.0 - x * (1.0 + (1.0 + 1.0 / x) * math.exp(-1.0 / x))


def solve_nu() -> float:
    """Root of :func:`nu_equation` by bisection on ``(0, 2]``."""
    lo, hi = 1e-3, 2.0
    assert nu_equation(lo) > 0.0 > nu_equation(hi)
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if nu_equation(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return lo if abs(nu_equation(lo)) <= abs(nu_equation(hi)) else hi


def prop_nonexistence_lower_bound(beta: float, m: int) -> float:
    """``e^{-2 beta m}``: lower bound on P[no proportional allocation] when ``m/n <= 1/(2 beta)``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    if m < 0:
        raise ValueError("m must be nonnegative")
    return math.exp(-2.0 * beta * m)


def chernoff_upper_tail(mean: float, delta: float) -> float:
    """Bound on ``P[X >= (1 + delta) E X]`` for sums of independent [0, 1] variables."""
    return math.exp(-delta * delta * mean / (2.0 + delta))


def chernoff_lower_tail(mean: float, delta: float) -> float:
    """Bound on ``P[X <= (1 - delta) E X]``."""
    return math.exp(-delta * delta * mean / 2.0)


def efron_stein_bound(n: int, c: float = 1.0) -> float:
    """Variance bound ``n c^2 / 4`` for a ``c``-difference-bounded function of ``n`` inputs."""
    return n * c * c / 4.0


def simulate_repeated_favorites(n, m, trials, seed, dist=None, batch=2000):
    """``T`` on ``trials`` random instances; trial ``t`` uses seed ``derive_seed(seed, n, m, t)``."""
    seeds = derive_seeds(seed, n, m, np.arange(trials))
    out = np.empty(trials, dtype=np.int64)
    for start in range(0, trials, batch):
        stop = min(start + batch, trials)
        out[start:stop] = repeated_favorites_batch(sample_batch(n, m, dist, seeds[start:stop]))
    return out


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    reference: float
    sigma: float
    trials: int
    passed: bool

    def to_dict(self):
        return dict(self.__dict__)


def _variance_sigma(x):
    """Standard error of the sample variance."""
    x = np.asarray(x, dtype=float)
    N = x.size
    d = x - x.mean()
    s2 = d.var(ddof=1)
    m4 = np.mean(d**4)
    return s2, math.sqrt(max(m4 - s2 * s2 * (N - 3) / (N - 1), 0.0) / N)


def efron_stein_variance_check(n: int, m: int, trials: int, seed: int,
                               dist: DistributionSpec | None = None) -> MonteCarloEstimate:
    """Estimate ``Var(T)`` and compare it with the bound ``n/4``."""
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    T = simulate_repeated_favorites(n, m, trials, seed, dist)
    s2, sigma = _variance_sigma(T)
    bound = efron_stein_bound(n)
    return MonteCarloEstimate(float(s2), bound, sigma, trials, bool(s2 <= bound + 3.0 * sigma))


def expected_repeated_favorites_check(n: int, m: int, trials: int, seed: int,
                                      dist: DistributionSpec | None = None) -> MonteCarloEstimate:
    """Monte Carlo mean of ``T`` against the closed form, at 3 standard errors."""
    T = simulate_repeated_favorites(n, m, trials, seed, dist)
    mean = float(T.mean())
    sigma = float(T.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("inf")
    ref = expected_repeated_favorites(n, m)
    return MonteCarloEstimate(mean, ref, sigma, trials, bool(abs(mean - ref) <= 3.0 * sigma))
