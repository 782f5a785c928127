import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import naive
from chorefair.core import (Allocation, bundle_cost_matrix, bundle_disutility, fairness_report,
                            is_efx, is_envy_free, is_mms_fair, is_proportional, mms_share)
from chorefair.instance import DisutilityMatrix, sample_instance

CROSS = [[0.1, 0.9], [0.9, 0.1]]


def alloc(*bundles):
    return Allocation.from_bundles([[j - 1 for j in b] for b in bundles])


def test_bundle_disutility_examples():
    D = [[0.3, 0.2], [0.5, 0.5]]
    assert bundle_disutility(D, 0, []) == 0
    assert bundle_disutility(D, 0, [0]) == 0.3
    assert bundle_disutility(D, 0, [0, 1]) == pytest.approx(0.5)
    with pytest.raises(IndexError):
        bundle_disutility(D, 2, [0])
    with pytest.raises(IndexError):
        bundle_disutility(D, 0, [5])


def test_envy_free_examples():
    assert is_envy_free(CROSS, alloc({1}, {2}))
    assert not is_envy_free(CROSS, alloc({2}, {1}))


def test_envy_free_matches_double_loop_on_all_partitions():
    D = sample_instance(2, 3, seed=4)
    for lab in naive.all_labelings(2, 3):
        a = Allocation(2, lab)
        assert is_envy_free(D, a) == naive.envy_free(D.costs, lab, 2)


def test_proportional_examples():
    assert is_proportional([[0.4, 0.4], [0.4, 0.4]], alloc({1}, {2}))
    assert not is_proportional([[0.5, 0.1], [0.1, 0.5]], alloc({1}, {2}))


def test_efx_examples():
    D = [[0.5, 0.5, 0.1], [0.5, 0.5, 0.1]]
    a = alloc({1, 2}, {3})
    assert not is_efx(D, a)
    assert is_efx(D, a) == naive.efx(np.array(D), a.labels, 2)
    assert is_efx(sample_instance(3, 3, seed=1), Allocation(3, [2, 0, 1]))


def test_mms_examples():
    assert mms_share([[0.3, 0.5], [0.1, 0.1]], 0) == 0.5
    assert mms_share([[0.7], [0.2]], 0) == 0.7
    assert mms_share([[0.2, 0.2, 0.2]] * 3, 0) == 0.2


def test_mms_guard():
    with pytest.raises(ValueError):
        mms_share(np.full((10, 8), 0.5), 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 3), st.integers(1, 6), st.integers(0, 10**6))
def test_mms_matches_enumeration(n, m, seed):
    D = np.asarray(sample_instance(n, max(m, 2), seed=seed))
    assert mms_share(D, 0) == pytest.approx(naive.mms(D[0].tolist(), n), abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 4), st.integers(2, 7), st.integers(0, 10**6), st.data())
def test_predicates_match_naive(n, m, seed, data):
    D = sample_instance(n, m, seed=seed)
    lab = data.draw(st.lists(st.integers(0, n - 1), min_size=m, max_size=m))
    a = Allocation(n, lab)
    ef = is_envy_free(D, a)
    assert ef == naive.envy_free(D.costs, lab, n)
    assert is_proportional(D, a) == naive.proportional(D.costs, lab, n)
    assert is_efx(D, a) == naive.efx(D.costs, lab, n)
    if ef:
        assert is_proportional(D, a) and is_efx(D, a)


def _ef_instances():
    for seed in range(300):
        D = sample_instance(3, 5, seed=seed)
        for lab in naive.all_labelings(3, 5):
            if naive.envy_free(D.costs, lab, 3):
                yield D, Allocation(3, lab)
                break


def test_ef_implies_prop_and_efx():
    count = 0
    for D, a in _ef_instances():
        r = fairness_report(D, a)
        assert r.envy_free and r.proportional and r.efx
        count += 1
    assert count > 10


def test_report_consistency():
    for seed in range(50):
        D = sample_instance(3, 4, seed=seed)
        a = Allocation(3, np.arange(4) % 3)
        r = fairness_report(D, a)
        assert r.envy_free == (r.max_envy == 0)
        assert r.proportional == (r.prop_violation == 0)
        assert r.mms_fair == is_mms_fair(D, a)
        assert r.max_envy >= 0 and r.prop_violation >= 0


def test_agent_permutation_invariance():
    D = sample_instance(4, 6, seed=8).costs
    lab = np.array([0, 1, 2, 3, 0, 1])
    perm = np.array([2, 0, 3, 1])  # new agent k is old agent perm[k]
    inv = np.argsort(perm)
    r1 = fairness_report(D, Allocation(4, lab), mms=False)
    r2 = fairness_report(D[perm], Allocation(4, inv[lab]), mms=False)
    assert (r1.envy_free, r1.proportional, r1.efx) == (r2.envy_free, r2.proportional, r2.efx)
    assert r1.max_envy == pytest.approx(r2.max_envy)


def test_row_scaling_invariance():
    for seed in range(40):
        D = sample_instance(3, 5, seed=seed).costs
        a = Allocation(3, [0, 1, 2, 0, 1])
        S = D.copy()
        S[1] *= 0.5
        assert is_envy_free(D, a) == is_envy_free(S, a)
        assert is_proportional(D, a) == is_proportional(S, a)
        assert is_efx(D, a) == is_efx(S, a)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        is_envy_free(CROSS, Allocation(2, [0, 1, 0]))


def test_allocation_partition_and_json():
    with pytest.raises(ValueError):
        Allocation.from_bundles([[0, 1], [1]])
    with pytest.raises(ValueError):
        Allocation(2, [0, 2])
    a = alloc({2, 3}, set(), {1})
    assert a.sizes().tolist() == [2, 0, 1]
    assert a.to_dict() == {"bundles": [[2, 3], [], [1]]}
    assert Allocation.from_dict(a.to_dict()) == a
    C = bundle_cost_matrix(DisutilityMatrix([[0.1, 0.2, 0.3]] * 3), a)
    assert C[0].tolist() == pytest.approx([0.5, 0.0, 0.1])
