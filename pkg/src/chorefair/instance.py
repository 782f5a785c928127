"""Disutility distributions and reproducible random instances."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._rng import uniform_open01

UNIFORM = "Uniform01"
PIECEWISE = "PiecewiseConstant"

_MAX_RESAMPLE_ROUNDS = 64


@dataclass(frozen=True)
class DistributionSpec:
    """A non-atomic distribution on [0, 1] with a piecewise-constant density.

    ``breakpoints`` always holds the full partition ``0 = b_0 < ... < b_K = 1``
    and ``densities[k]`` is the density on ``(b_k, b_{k+1}]``. ``alpha`` and
    ``beta`` are the infimum and supremum of the density; ``mean`` and
    ``variance`` are its exact moments.
    """

    kind: str
    breakpoints: tuple
    densities: tuple
    alpha: float = field(init=False)
    beta: float = field(init=False)
    mean: float = field(init=False)
    variance: float = field(init=False)

    def __post_init__(self):
        if self.kind not in (UNIFORM, PIECEWISE):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        b = np.asarray(self.breakpoints, dtype=float)
        d = np.asarray(self.densities, dtype=float)
        if d.ndim != 1 or d.size == 0:
            raise ValueError("densities must be a non-empty list")
        if b.shape != (d.size + 1,):
            raise ValueError("need exactly one more breakpoint than densities")
        if b[0] != 0.0 or b[-1] != 1.0 or np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must increase strictly from 0 to 1")
        if not np.all(np.isfinite(d)) or np.any(d <= 0):
            raise ValueError("densities must be finite and positive")
        total = float(np.sum(d * np.diff(b)))
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"density integrates to {total!r}, not 1")
        if self.kind == UNIFORM and (d.size != 1 or d[0] != 1.0):
            raise ValueError("Uniform01 has the single density 1 on [0, 1]")
        object.__setattr__(self, "breakpoints", tuple(float(x) for x in b))
        object.__setattr__(self, "densities", tuple(float(x) for x in d))
        object.__setattr__(self, "alpha", float(d.min()))
        object.__setattr__(self, "beta", float(d.max()))
        mean = float(np.sum(d * np.diff(b**2)) / 2.0)
        second = float(np.sum(d * np.diff(b**3)) / 3.0)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", second - mean * mean)

    @classmethod
    def uniform(cls):
        return cls(UNIFORM, (0.0, 1.0), (1.0,))

    @classmethod
    def piecewise(cls, breakpoints, densities):
        """Build a piecewise-constant density.

        ``breakpoints`` may be the full list including 0 and 1, or only the
        interior cut points (one fewer than ``densities``).
        """
        breakpoints = [float(x) for x in breakpoints]
        densities = [float(x) for x in densities]
        if len(breakpoints) == len(densities) - 1:
            breakpoints = [0.0, *breakpoints, 1.0]
        return cls(PIECEWISE, tuple(breakpoints), tuple(densities))

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        return cls.piecewise(data["breakpoints"], data["densities"])

    def _cum(self):
        b = np.asarray(self.breakpoints)
        c = np.concatenate([[0.0], np.cumsum(np.asarray(self.densities) * np.diff(b))])
        return b, c / c[-1]

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        b = np.asarray(self.breakpoints)
        k = np.clip(np.searchsorted(b, x, side="left") - 1, 0, len(self.densities) - 1)
        out = np.asarray(self.densities)[k]
        return np.where((x < 0) | (x > 1), 0.0, out)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        b, c = self._cum()
        k = np.clip(np.searchsorted(b, x, side="right") - 1, 0, len(self.densities) - 1)
        return np.minimum(c[k] + np.asarray(self.densities)[k] * (x - b[k]), 1.0)

    def ppf(self, q):
        """Vectorised inverse CDF; ``q`` must lie in [0, 1]."""
        q = np.asarray(q, dtype=float)
        if np.any(~((q >= 0.0) & (q <= 1.0))):
            raise ValueError("quantile levels must lie in [0, 1]")
        b, c = self._cum()
        k = np.clip(np.searchsorted(c, q, side="right") - 1, 0, len(self.densities) - 1)
        x = b[k] + (q - c[k]) / np.asarray(self.densities)[k]
        x = np.clip(x, 0.0, 1.0)
        return np.where(q == 1.0, 1.0, np.where(q == 0.0, 0.0, x))

    def to_dict(self):
        return {"kind": self.kind, "breakpoints": list(self.breakpoints),
                "densities": list(self.densities)}


def inverse_cdf(dist: DistributionSpec, q: float) -> float:
    """Return ``x`` with ``F(x) = q`` for ``q`` in [0, 1]."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q={q!r} outside [0, 1]")
    return float(dist.ppf(q))


@dataclass(frozen=True, eq=False)
class DisutilityMatrix:
    """An ``n x m`` grid of chore costs in [0, 1]; row ``i`` belongs to agent ``i``.

    The array is stored read-only. ``perturbed`` records whether sampling had
    to redraw any entry to keep all costs positive and pairwise distinct.
    """

    costs: np.ndarray
    perturbed: bool = False

    def __post_init__(self):
        a = np.array(self.costs, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"costs must be a non-empty 2-D grid, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or a.min() < 0.0 or a.max() > 1.0:
            raise ValueError("every disutility must lie in [0, 1]")
        a.setflags(write=False)
        object.__setattr__(self, "costs", a)

    @property
    def n(self) -> int:
        return self.costs.shape[0]

    @property
    def m(self) -> int:
        return self.costs.shape[1]

    @property
    def shape(self):
        return self.costs.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.costs
        return self.costs.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, DisutilityMatrix):
            return NotImplemented
        return self.costs.shape == other.costs.shape and bool(np.array_equal(self.costs, other.costs))

    __hash__ = None

    def to_dict(self):
        return {"n": self.n, "m": self.m, "costs": self.costs.tolist()}

    @classmethod
    def from_dict(cls, data):
        costs = np.asarray(data["costs"], dtype=float)
        if costs.ndim != 2:
            raise ValueError("costs must be a list of rows")
        if "n" in data and data["n"] != costs.shape[0]:
            raise ValueError(f"n={data['n']} but costs has {costs.shape[0]} rows")
        if "m" in data and data["m"] != costs.shape[1]:
            raise ValueError(f"m={data['m']} but costs has {costs.shape[1]} columns")
        return cls(costs)

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))


def _offending(costs):
    """Mask of entries that are zero or repeat an earlier entry (row-major)."""
    flat = costs.ravel()
    bad = flat <= 0.0
    _, first = np.unique(flat, return_index=True)
    dup = np.ones(flat.size, dtype=bool)
    dup[first] = False
    return (bad | dup).reshape(costs.shape)


def sample_instance(n: int, m: int, dist: DistributionSpec | None = None, seed: int = 0) -> DisutilityMatrix:
    """Draw an ``n x m`` matrix of i.i.d. disutilities from ``dist``.

    Entry ``(i, j)`` is a function of ``(seed, i, j)`` only. Zero or repeated
    values are redrawn from the same stream with a bumped attempt counter, so
    the result is still a pure function of the arguments.
    """
    if int(n) != n or int(m) != m or n < 2 or m < 2:
        raise ValueError(f"need n >= 2 and m >= 2, got n={n}, m={m}")
    if dist is None:
        dist = DistributionSpec.uniform()
    if not isinstance(dist, DistributionSpec):
        raise TypeError("dist must be a DistributionSpec")
    costs, perturbed = _draw(int(n), int(m), dist, seed)
    return DisutilityMatrix(costs, perturbed=perturbed)


def sample_batch(n: int, m: int, dist: DistributionSpec | None, seeds) -> np.ndarray:
    """Stack of ``sample_instance(n, m, dist, s).costs`` for every ``s`` in ``seeds``.

    Vectorised over seeds; instances that need redraws fall back to the
    scalar path, so results are identical. ``m = 1`` is allowed here.
    """
    if dist is None:
        dist = DistributionSpec.uniform()
    seeds = np.asarray(seeds, dtype=np.uint64)
    keys = seeds[:, None, None]
    rows = np.arange(n)[None, :, None]
    cols = np.arange(m)[None, None, :]
    out = dist.ppf(uniform_open01(keys, rows, cols, 0))
    flat = np.sort(out.reshape(len(seeds), -1), axis=1)
    bad = (flat[:, 0] <= 0.0) | np.any(np.diff(flat, axis=1) == 0.0, axis=1)
    for b in np.flatnonzero(bad):
        out[b] = _draw(n, m, dist, int(seeds[b]))[0]
    return out


def _draw(n, m, dist, seed):
    rows = np.arange(n)[:, None]
    cols = np.arange(m)[None, :]
    costs = dist.ppf(uniform_open01(seed, rows, cols, 0))
    perturbed = False
    for attempt in range(1, _MAX_RESAMPLE_ROUNDS + 1):
        bad = _offending(costs)
        if not bad.any():
            break
        perturbed = True
        ii, jj = np.nonzero(bad)
        costs[ii, jj] = dist.ppf(uniform_open01(seed, ii, jj, attempt))
    else:
        raise RuntimeError("could not draw distinct positive disutilities")
    return costs, perturbed
