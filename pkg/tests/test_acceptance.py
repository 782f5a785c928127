"""Acceptance criteria 1 to 11, each at its stated tolerance.

Every test prints one ``ACCEPTANCE k: PASS|FAIL`` line (also repeated in the
pytest terminal summary) and then asserts the verdict. Run on its own with::

    pytest tests/test_acceptance.py -v
"""

import itertools
import math
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import brentq

import naive
from acceptance_log import report
from chorefair import allocators as A
from chorefair._rng import derive_seed
from chorefair.core import _envy_stats, is_envy_free, is_proportional
from chorefair.experiments import ExperimentConfig, canonicalize_csv, run_grid
from chorefair.instance import sample_instance
from chorefair.matching import (BipartiteGraph, min_cost_perfect_matching, right_saturated_2_matching,
                                sample_random_bipartite)
from chorefair.oracle import exists_envy_free, exists_proportional
from chorefair.theory import (ef_nonexistence_certificate, expected_repeated_favorites,
                              prop_nonexistence_certificate, simulate_repeated_favorites, solve_nu,
                              nu_equation)

MASTER = 20240601


def small_instances():
    """1035 instances: 23 per cell of n in [2, 6] x m in [2, 10]."""
    out = []
    for k in range(23):
        for n in range(2, 7):
            for m in range(2, 11):
                out.append(sample_instance(n, m, seed=derive_seed(MASTER, n, m, k)))
    return out


@pytest.fixture(scope="module")
def instance_set():
    return small_instances()


def ci_sigma(p, k):
    return math.sqrt(max(p * (1 - p), 0.0) / k)


def nondecreasing_within(rates, trials, z=3.0):
    """``p_{k+1} >= p_k - z * sqrt(s_k^2 + s_{k+1}^2)`` for consecutive cells."""
    for (p, q) in zip(rates, rates[1:]):
        slack = z * math.sqrt(ci_sigma(p, trials) ** 2 + ci_sigma(q, trials) ** 2)
        if q < p - slack:
            return False
    return True


def test_criterion_01_soundness(instance_set):
    t0 = time.time()
    bad = []
    counts = dict(prop=0, twostage=0, algdiv=0)
    for D in instance_set:
        n, m = D.shape
        for fn in (A.prop_small, A.prop_medium):
            out = fn(D)
            if out.allocation is not None:
                counts["prop"] += 1
                if not is_proportional(D, out.allocation):
                    bad.append((fn.__name__, n, m))
        if m >= 2 * n:
            out = A.two_stage(D)
            if out.allocation is not None and out.diagnostics["stage1_envy_free"]:
                counts["twostage"] += 1
                if not is_envy_free(D, out.allocation):
                    bad.append(("two_stage", n, m))
        if m % n == 0 and m >= 2 * n:
            counts["algdiv"] += 1
            if set(A.alg_div(D).allocation.sizes().tolist()) != {m // n}:
                bad.append(("alg_div", n, m))
    elapsed = time.time() - t0
    ok = len(instance_set) >= 1000 and not bad and elapsed < 60
    report(1, ok, f"{len(instance_set)} instances, checked {counts}, violations={len(bad)}, {elapsed:.1f}s")
    assert ok, bad[:5]


def test_criterion_02_oracle_cross_checks(instance_set):
    t0 = time.time()
    violations = []
    fired = dict(ef=0, prop=0)
    for D in instance_set:
        n, m = D.shape
        ef, prop = bool(exists_envy_free(D)), bool(exists_proportional(D))
        if ef_nonexistence_certificate(D).fired:
            fired["ef"] += 1
            if ef:
                violations.append(("ef-cert", n, m))
        if prop_nonexistence_certificate(D).fired:
            fired["prop"] += 1
            if prop:
                violations.append(("prop-cert", n, m))
        if ef and not prop:
            violations.append(("ef=>prop", n, m))
        ef_outs = [A._cost_minimizing_outcome(D)]
        if m >= 2 * n:
            ef_outs.append(A.two_stage(D))
        if m % n == 0 and m >= 2 * n:
            ef_outs.append(A.alg_div(D))
        ef_outs.append(A.dispatch_envy_free(D))
        for out in ef_outs:
            if out.allocation is not None and is_envy_free(D, out.allocation) and not ef:
                violations.append((out.algorithm, n, m))
        for out in (A.prop_small(D), A.prop_medium(D), A.dispatch_proportional(D)):
            if out.allocation is not None and is_proportional(D, out.allocation) and not prop:
                violations.append((out.algorithm, n, m))
    elapsed = time.time() - t0
    ok = not violations and elapsed < 300
    report(2, ok, f"certificates fired {fired}, violations={len(violations)}, {elapsed:.1f}s")
    assert ok, violations[:5]


def test_criterion_03_nu():
    t0 = time.perf_counter()
    nu = solve_nu()
    elapsed = time.perf_counter() - t0
    residual = abs(nu_equation(nu))
    independent = brentq(nu_equation, 0.5, 2.0, xtol=1e-15)
    close = abs(nu - 1.1256) <= 5e-5
    ok = close and residual <= 1e-12 and elapsed < 1
    report(3, ok, f"nu={nu:.10f} (brentq {independent:.10f}), |nu-1.1256|={abs(nu - 1.1256):.2e} "
                  f"vs tol 5e-05, residual={residual:.1e}")
    assert ok


def test_criterion_04_expected_T():
    t0 = time.time()
    rows = []
    ok = True
    for n, m in [(10, 10), (20, 20), (20, 40)]:
        T = simulate_repeated_favorites(n, m, 100_000, seed=MASTER)
        mean, se = T.mean(), T.std(ddof=1) / math.sqrt(T.size)
        ref = expected_repeated_favorites(n, m)
        good = abs(mean - ref) <= 3 * se
        ok &= good
        rows.append(f"({n},{m}) {mean:.4f} vs {ref:.4f} [{abs(mean - ref) / se:.2f} se]")
    enum = naive.expected_T_by_enumeration(2, 2)
    ok &= enum == 0.5 and expected_repeated_favorites(2, 2) == pytest.approx(0.5, abs=1e-15)
    elapsed = time.time() - t0
    ok &= elapsed < 120
    report(4, ok, "; ".join(rows) + f"; (2,2) enumeration {enum}; {elapsed:.1f}s")
    assert ok


def test_criterion_05_efron_stein():
    t0 = time.time()
    T = simulate_repeated_favorites(20, 20, 100_000, seed=MASTER + 1).astype(float)
    d = T - T.mean()
    s2 = d.var(ddof=1)
    sigma = math.sqrt(max(np.mean(d**4) - s2 * s2, 0.0) / T.size)
    elapsed = time.time() - t0
    ok = s2 <= 5 + 3 * sigma and elapsed < 60
    report(5, ok, f"Var(T)={s2:.4f} <= 5 + 3*{sigma:.4f}; {elapsed:.1f}s")
    assert ok


def test_criterion_06_two_stage_trend():
    t0 = time.time()
    cfg = ExperimentConfig((20, 40, 80), "ratio:2", algorithm="twostage", trials=200, seed=MASTER, workers=4)
    records = run_grid(cfg)
    rates = [float(np.mean([r.found and r.ef for r in records if r.n == n])) for n in (20, 40, 80)]
    elapsed = time.time() - t0
    ok = nondecreasing_within(rates, 200) and rates[-1] >= 0.9 and elapsed < 600
    report(6, ok, f"EF success at n=20,40,80: {[round(x, 3) for x in rates]}; {elapsed:.1f}s")
    assert ok


def test_criterion_07_certificate_trend():
    t0 = time.time()
    cfg = ExperimentConfig((20, 40, 80), "ratio:1.05", algorithm="none", trials=500, seed=MASTER, workers=4)
    records = run_grid(cfg)
    rates = [float(np.mean([r.cert == "RepeatedFavorites" for r in records if r.n == n])) for n in (20, 40, 80)]
    p_distinct = Fraction(math.factorial(15), 15**15)
    tail = np.mean([ef_nonexistence_certificate(sample_instance(15, 15, seed=derive_seed(MASTER, 15, 15, t))).fired
                    for t in range(1000)])
    elapsed = time.time() - t0
    ok = nondecreasing_within(rates, 500) and rates[-1] >= 0.9 and tail >= 0.99 and elapsed < 300
    report(7, ok, f"certificate rate at n=20,40,80 (m=ceil(1.05n)): {[round(x, 3) for x in rates]}; "
                  f"n=m=15 rate {tail:.3f} (exact P[distinct]={float(p_distinct):.3e}); {elapsed:.1f}s")
    assert ok


def test_criterion_08_prop_bound():
    t0 = time.time()
    k = 10_000
    cert = absent = 0
    for t in range(k):
        D = sample_instance(10, 2, seed=derive_seed(MASTER, 10, 2, t))
        cert += prop_nonexistence_certificate(D).fired
        absent += not exists_proportional(D)
    bound = math.exp(-4)
    pc, po = cert / k, absent / k
    elapsed = time.time() - t0
    ok = pc >= bound - 3 * ci_sigma(pc, k) and po >= bound - 3 * ci_sigma(po, k) and elapsed < 120
    report(8, ok, f"certificate {pc:.4f}, oracle non-existence {po:.4f}, bound e^-4={bound:.4f}; {elapsed:.1f}s")
    assert ok


def test_criterion_09_prop_routes():
    t0 = time.time()
    small = [A.prop_small(sample_instance(5000, 30, seed=derive_seed(MASTER, 5000, 30, t))) for t in range(200)]
    small_rate = np.mean([o.allocation is not None for o in small])
    small_sound = all(o.diagnostics["proportional"] for o in small if o.allocation is not None)
    medium_ok = medium_verified = 0
    groups_ok = []
    diag = None
    for t in range(100):
        D = sample_instance(1000, 500, seed=derive_seed(MASTER, 1000, 500, t))
        out = A.prop_medium(D)
        diag = out.diagnostics
        groups_ok.append(diag["groups_ok"] / diag["groups"])
        if out.allocation is not None:
            medium_ok += 1
            medium_verified += is_proportional(D, out.allocation)
    medium_rate = medium_ok / 100
    elapsed = time.time() - t0
    ok = (small_rate >= 0.95 and small_sound and medium_rate >= 0.8
          and medium_verified == medium_ok and elapsed < 600)
    report(9, ok, f"prop_small n=5000 m=30: {small_rate:.3f} (>=0.95); prop_medium n=1000 m=500: "
                  f"{medium_rate:.3f} (>=0.8), m0={diag['m0']}, {diag['groups']} groups of "
                  f"{diag['min_group_size']}-{diag['max_group_size']} chores, mean fraction of groups "
                  f"matched {np.mean(groups_ok):.3f}, successes verified {medium_verified}/{medium_ok}; {elapsed:.1f}s")
    assert ok


def hall_2_matching(nl, nr, edges):
    """Right-saturated 2-matching exists iff 2|N(S)| >= |S| for every set S of right vertices."""
    nbr = [0] * nr
    for u, v in edges:
        nbr[v] |= 1 << u
    for mask in range(1, 1 << nr):
        union = 0
        for v in range(nr):
            if mask >> v & 1:
                union |= nbr[v]
        if 2 * bin(union).count("1") < bin(mask).count("1"):
            return False
    return True


def test_criterion_10_matching_engine():
    t0 = time.time()
    rng = np.random.default_rng(MASTER)
    disagree = 0
    for _ in range(1000):
        nl, nr = int(rng.integers(1, 7)), int(rng.integers(1, 9))
        mask = rng.random((nl, nr)) < rng.random()
        edges = frozenset(zip(*map(lambda a: a.tolist(), np.nonzero(mask))))
        m = right_saturated_2_matching(BipartiteGraph(nl, nr, edges))
        disagree += (m is not None) != hall_2_matching(nl, nr, edges)
    n = 200
    p = 2 * (math.log(n) + 6) / n
    lemma = np.mean([right_saturated_2_matching(sample_random_bipartite(120, 180, p, seed=derive_seed(MASTER, t)))
                     is not None for t in range(500)])
    perms = np.array(list(itertools.permutations(range(6))))
    mismatched = 0
    for _ in range(1000):
        C = rng.random((6, 6))
        perm = min_cost_perfect_matching(C)
        best = C[np.arange(6), perms].sum(axis=1).min()
        mismatched += C[np.arange(6), perm].sum() != best
    elapsed = time.time() - t0
    ok = disagree == 0 and lemma >= 0.95 and mismatched == 0 and elapsed < 180
    report(10, ok, f"2-matching vs Hall brute force: {disagree} disagreements / 1000; random regime success "
                   f"{lemma:.3f} (>=0.95); min-cost vs 720 permutations: {mismatched} mismatches / 1000; {elapsed:.1f}s")
    assert ok


def test_criterion_11_determinism(tmp_path):
    t0 = time.time()
    outs = []
    for w in (1, 4):
        path = tmp_path / f"w{w}.csv"
        res = subprocess.run([sys.executable, "-m", "chorefair", "mc", "--n", "20,40,80", "--m-rule", "ratio:2.0",
                              "--dist", "uniform", "--algo", "ef", "--trials", "50", "--seed", "1",
                              "--workers", str(w), "--out", str(path)], capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        outs.append(canonicalize_csv(path.read_text()).encode())
    elapsed = time.time() - t0
    ok = outs[0] == outs[1] and elapsed < 120
    report(11, ok, f"canonical CSV workers=1 vs 4: {'identical' if outs[0] == outs[1] else 'DIFFERENT'} "
                   f"({len(outs[0])} bytes); {elapsed:.1f}s")
    assert ok
