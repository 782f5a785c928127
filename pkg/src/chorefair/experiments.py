"""Monte Carlo harness: grids of random instances, per-cell rates and CSV/JSON output."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from ._rng import derive_seed
from .core import _envy_stats, _prop_violation
from .estimators import ALLOCATORS, make_allocator
from .instance import DistributionSpec, sample_instance
from .theory import (ef_nonexistence_certificate, expected_repeated_favorites,
                     prop_nonexistence_certificate, _repeated)

SCHEMA_VERSION = 1
CSV_COLUMNS = ("n", "m", "trial", "seed", "algo", "found", "ef", "prop", "cert", "T", "runtime_ns")
CERT_ONLY = "none"
_PROP_FAMILY = {"propsmall", "propmedium", "prop"}


class ConfigError(ValueError):
    """Raised for an unusable experiment configuration."""


@dataclass(frozen=True)
class MRule:
    """How ``m`` follows from ``n``: ``fixed:M``, ``ratio:rho`` (``ceil(rho n)``) or ``divisible:r``."""

    kind: str
    value: Fraction

    @classmethod
    def parse(cls, text):
        kind, sep, raw = str(text).partition(":")
        if not sep or kind not in ("fixed", "ratio", "divisible"):
            raise ConfigError(f"bad m-rule {text!r}; use fixed:M, ratio:RHO or divisible:R")
        try:
            value = Fraction(raw.strip())
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"bad m-rule value {raw!r}") from None
        if value <= 0 or (kind != "ratio" and value.denominator != 1):
            raise ConfigError(f"m-rule {kind} needs a positive {'number' if kind == 'ratio' else 'integer'}")
        return cls(kind, value)

    def m_for(self, n: int) -> int:
        if self.kind == "fixed":
            return int(self.value)
        if self.kind == "ratio":
            return math.ceil(self.value * n)
        return int(self.value) * n

    def __str__(self):
        return f"{self.kind}:{self.value}"


@dataclass(frozen=True)
class ExperimentConfig:
    n_values: tuple
    m_rule: MRule
    dist: DistributionSpec = field(default_factory=DistributionSpec.uniform)
    algorithm: str = "ef"
    trials: int = 100
    seed: int = 0
    workers: int = 1
    options: tuple = ()

    def __post_init__(self):
        if isinstance(self.m_rule, str):
            object.__setattr__(self, "m_rule", MRule.parse(self.m_rule))
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if isinstance(self.options, dict):
            object.__setattr__(self, "options", tuple(sorted(self.options.items())))
        if not self.n_values:
            raise ConfigError("n_values is empty")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.algorithm != CERT_ONLY and self.algorithm not in ALLOCATORS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        for n in self.n_values:
            if n < 2 or self.m_rule.m_for(n) < 2:
                raise ConfigError(f"cell n={n}, m={self.m_rule.m_for(n)} is below n, m >= 2")

    def cells(self):
        return [(n, self.m_rule.m_for(n)) for n in self.n_values]


@dataclass(frozen=True)
class TrialRecord:
    n: int
    m: int
    trial: int
    seed: int
    algo: str
    found: bool
    ef: bool
    prop: bool
    cert: str
    T: int
    runtime_ns: int

    def row(self):
        return [self.n, self.m, self.trial, self.seed, self.algo, int(self.found),
                int(self.ef), int(self.prop), self.cert, self.T, self.runtime_ns]

    @property
    def success(self) -> bool:
        """Found and fair in the sense the algorithm targets; for ``none`` a fired certificate."""
        if self.algo == CERT_ONLY:
            return self.cert not in ("None", "") and not self.cert.startswith("error:")
        return self.found and (self.prop if self.algo in _PROP_FAMILY else self.ef)


def trial_seed(master: int, n: int, m: int, t: int) -> int:
    return derive_seed(master, n, m, t)


def run_trial(n, m, t, config: ExperimentConfig) -> TrialRecord:
    """One instance, one allocator run; exceptions become a failed record."""
    seed = trial_seed(config.seed, n, m, t)
    algo = config.algorithm
    T = -1
    try:
        D = np.asarray(sample_instance(n, m, config.dist, seed))
        T = _repeated(np.argmin(D, axis=1), m)
        cert_fn = prop_nonexistence_certificate if algo in _PROP_FAMILY else ef_nonexistence_certificate
        cert = cert_fn(D).kind
        found = ef = prop = False
        runtime = 0
        if algo != CERT_ONLY:
            est = make_allocator(algo, **dict(config.options))
            start = time.perf_counter_ns()
            est.fit(D)
            runtime = time.perf_counter_ns() - start
            found = est.found_
            if found:
                ef = _envy_stats(D, est.labels_, n)[0] == 0.0
                prop = _prop_violation(D, est.labels_, n) == 0.0
    except Exception as exc:  # recorded, never fatal to the grid
        return TrialRecord(n, m, t, seed, algo, False, False, False, f"error:{type(exc).__name__}", T, 0)
    return TrialRecord(n, m, t, seed, algo, bool(found), bool(ef), bool(prop), cert, int(T), int(runtime))


def _run_chunk(args):
    n, m, lo, hi, config = args
    return [run_trial(n, m, t, config) for t in range(lo, hi)]


def _chunks(config, size):
    for n, m in config.cells():
        for lo in range(0, config.trials, size):
            yield (n, m, lo, min(lo + size, config.trials), config)


def run_grid(config: ExperimentConfig) -> list[TrialRecord]:
    """All trials of every cell, sorted by ``(n, m, trial)`` whatever the worker count."""
    if config.workers == 1:
        records = [r for c in _chunks(config, config.trials) for r in _run_chunk(c)]
    else:
        size = max(1, math.ceil(config.trials / (4 * config.workers)))
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = [r for chunk in pool.map(_run_chunk, _chunks(config, size)) for r in chunk]
    records.sort(key=lambda r: (r.n, r.m, r.trial))
    return records


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054):
    if trials <= 0:
        raise ValueError("need at least one trial")
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class CellSummary:
    n: int
    m: int
    algo: str
    trials: int
    successes: int
    success_rate: float
    ci_low: float
    ci_high: float
    found_rate: float
    ef_rate: float
    prop_rate: float
    cert_rate: float
    errors: int
    mean_T: float
    expected_T: float
    mean_runtime_ns: float


def summarize(records) -> list[CellSummary]:
    records = list(records)
    if not records:
        raise ValueError("no records to summarize")
    groups = {}
    for r in records:
        groups.setdefault((r.n, r.m, r.algo), []).append(r)
    out = []
    for (n, m, algo), rs in sorted(groups.items()):
        k = len(rs)
        s = sum(r.success for r in rs)
        lo, hi = wilson_interval(s, k)
        errors = sum(r.cert.startswith("error:") for r in rs)
        fired = sum(r.cert not in ("None", "") and not r.cert.startswith("error:") for r in rs)
        Ts = [r.T for r in rs if r.T >= 0]
        out.append(CellSummary(
            n, m, algo, k, s, s / k, lo, hi,
            sum(r.found for r in rs) / k, sum(r.ef for r in rs) / k, sum(r.prop for r in rs) / k,
            fired / k, errors, float(np.mean(Ts)) if Ts else float("nan"),
            expected_repeated_favorites(n, m), float(np.mean([r.runtime_ns for r in rs]))))
    return out


def records_to_csv(records) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def records_to_json(records, summary=None) -> str:
    payload = {"schema": SCHEMA_VERSION, "records": [asdict(r) for r in records]}
    if summary is not None:
        payload["summary"] = [asdict(c) for c in summary]
    return json.dumps(payload, indent=1)


def canonicalize_csv(text: str) -> str:
    """Rows sorted by ``(n, m, trial)`` with the timing column zeroed, for byte comparison."""
    lines = text.splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    rows = list(csv.reader(body))
    cols, rows = rows[0], rows[1:]
    rt = cols.index("runtime_ns")
    for row in rows:
        row[rt] = "0"
    rows.sort(key=lambda row: (int(row[0]), int(row[1]), int(row[2])))
    buf = io.StringIO()
    for h in header:
        buf.write(h + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    w.writerows(rows)
    return buf.getvalue()
