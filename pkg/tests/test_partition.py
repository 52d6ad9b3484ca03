from collections import Counter, defaultdict
from fractions import Fraction
from itertools import combinations, permutations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from pirsi import partition as pc
from pirsi.core import CapacityError, Database, DecodeError, DemandSpec, ParameterError, ProtocolError, all_demands

# Indices are 0-based; the worked example with demand 2 and side {4, 6} over
# eight messages becomes demand 1, side {3, 5}.
EX2_SPEC = DemandSpec(1, {3, 5})
EX2_PARTS = [{0, 6, 7}, {2, 3, 4}, {1, 5}]


def brute_distribution(K, M, W, S):
    """Oracle: walk every labeled choice, side pick and dealing order."""
    g = -(-K // (M + 1))
    sizes = [M + 1] * (g - 1) + [K - (g - 1) * (M + 1)]
    dist = defaultdict(Fraction)
    for label, size in enumerate(sizes):
        p_label = Fraction(size, K)
        if size == M + 1:
            picks = [tuple(S)]
        else:
            picks = list(combinations(sorted(S), size - 1))
        for pick in picks:
            head = {W, *pick}
            rest = sorted(set(range(K)) - head)
            orders = list(permutations(rest))
            for order in orders:
                parts, pos = [], 0
                for i, s in enumerate(sizes):
                    if i == label:
                        parts.append(tuple(sorted(head)))
                    else:
                        parts.append(tuple(sorted(order[pos:pos + s])))
                        pos += s
                dist[tuple(sorted(parts))] += p_label / len(picks) / len(orders)
    return dict(dist)


def test_eight_message_fill():
    p = pc.fill_partition(8, EX2_SPEC, label=2, side_pick={5}, rest_order=[0, 6, 7, 2, 3, 4])
    assert [set(x) for x in p.parts] == EX2_PARTS


def test_singletons_when_no_side_information():
    for W in range(4):
        p = pc.build_partition(DemandSpec(W, set()), 4, W)
        assert sorted(map(sorted, p.parts)) == [[0], [1], [2], [3]]


def test_k3_m1_branches():
    # demand 0, side {1}: {{0,1},{2}} w.p. 2/3, {{1,2},{0}} w.p. 1/3
    dist = pc.enumerate_queries(DemandSpec(0, {1}), 3)
    assert dist == {((0, 1), (2,)): Fraction(2, 3), ((0,), (1, 2)): Fraction(1, 3)}


def test_k3_m1_sampling_frequencies():
    rng = np.random.default_rng(0)
    counts = Counter(pc.build_partition(DemandSpec(0, {1}), 3, rng).canonical() for _ in range(6000))
    assert abs(counts[((0, 1), (2,))] / 6000 - 2 / 3) < 0.03


def test_divisible_case_is_deterministic():
    assert pc.enumerate_queries(DemandSpec(0, {1}), 4) == {((0, 1), (2, 3)): 1}


@pytest.mark.parametrize("K", range(1, 7))
def test_enumeration_matches_brute_force(K):
    for M in range(min(K, 3)):
        for d in all_demands(K, M):
            got = pc.enumerate_queries(d, K)
            assert got == brute_distribution(K, M, d.W, d.S)
            assert sum(got.values()) == 1


def test_sampler_matches_enumeration():
    K, M = 5, 1
    spec = DemandSpec(2, {4})
    dist = pc.enumerate_queries(spec, K)
    keys = sorted(dist)
    rng = np.random.default_rng(2024)
    n = 20_000
    counts = Counter(pc.build_partition(spec, K, rng).canonical() for _ in range(n))
    assert set(counts) <= set(keys)
    observed = [counts[k] for k in keys]
    expected = [float(dist[k]) * n for k in keys]
    assert chisquare(observed, expected).pvalue > 0.01


def test_enumeration_capacity_limit():
    with pytest.raises(CapacityError):
        pc.enumerate_queries(DemandSpec(0, {1}), 11)


def test_enumeration_k10_runs():
    assert sum(pc.enumerate_queries(DemandSpec(0, {1}), 10).values()) == 1
    assert sum(pc.enumerate_queries(DemandSpec(3, {0, 9}), 10).values()) == 1


def test_build_rejects_m_ge_k():
    with pytest.raises(ParameterError):
        pc.build_partition(DemandSpec(0, {1, 2}), 2)


@given(st.integers(1, 10), st.data())
def test_partition_invariants(K, data):
    M = data.draw(st.integers(0, K - 1))
    W = data.draw(st.integers(0, K - 1))
    S = data.draw(st.sets(st.sampled_from([j for j in range(K) if j != W]), min_size=M, max_size=M)) if M else set()
    seed = data.draw(st.integers(0, 2**32))
    spec = DemandSpec(W, S)
    p = pc.build_partition(spec, K, seed)
    assert len(p.parts) == -(-K // (M + 1))
    assert sorted(j for part in p.parts for j in part) == list(range(K))
    head = p.part_of(W)
    assert head - {W} <= spec.S
    sizes = sorted(len(x) for x in p.parts)
    assert sizes[1:] == [M + 1] * (len(sizes) - 1) or len(sizes) == 1


def test_encode_query_orders_uniform():
    p = pc.Partition(6, ({0, 1}, {2, 3}, {4, 5}))
    rng = np.random.default_rng(5)
    n = 10_000
    counts = Counter(tuple(min(x) for x in pc.encode_query(p, rng).parts) for _ in range(n))
    assert len(counts) == 6
    assert chisquare(list(counts.values())).pvalue > 0.01


def test_encode_singletons():
    p = pc.Partition(3, ({0}, {1}, {2}))
    q = pc.encode_query(p, 1)
    assert sorted(q.vectors) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]


def test_eight_message_answer_and_decode():
    db = Database.random(8, 16, 99)
    X = db.messages
    q = pc.PartitionQuery(8, tuple(frozenset(p) for p in EX2_PARTS))
    ans = pc.server_answer(db, q)
    assert ans.sums == (X[0] ^ X[6] ^ X[7], X[2] ^ X[3] ^ X[4], X[1] ^ X[5])
    assert pc.decode(ans, q, EX2_SPEC, db.side_values(EX2_SPEC.S)) == X[1]
    assert ans.sums[2] ^ X[5] == X[1]


def test_server_answer_small_cases():
    db = Database(2, 2, (0b01, 0b11))
    q = pc.PartitionQuery.from_vectors([(1, 1)])
    assert pc.server_answer(db, q).sums == (0b10,)
    zero = pc.PartitionQuery.from_vectors([(0, 0)])
    assert pc.server_answer(db, zero).sums == (0,)


def test_server_answer_length_mismatch():
    db = Database(2, 2, (1, 2))
    with pytest.raises(ProtocolError):
        pc.server_answer(db, pc.PartitionQuery.from_vectors([(1, 0, 1)]))
    with pytest.raises(ProtocolError):
        pc.PartitionQuery.from_vectors([(1, 0), (1,)])


def test_decode_singleton_and_k3_branch():
    db = Database(3, 4, (5, 9, 12))
    q = pc.PartitionQuery(3, (frozenset({1, 2}), frozenset({0})))
    ans = pc.server_answer(db, q)
    assert pc.decode(ans, q, DemandSpec(0, {1}), {1: 9}) == 5
    q0 = pc.PartitionQuery(3, (frozenset({2}), frozenset({0}), frozenset({1})))
    assert pc.decode(pc.server_answer(db, q0), q0, DemandSpec(1, set()), {}) == 9


def test_decode_corrupted():
    db = Database(3, 4, (5, 9, 12))
    q = pc.PartitionQuery(3, (frozenset({1, 2}),))
    with pytest.raises(DecodeError):
        pc.decode(pc.server_answer(db, q), q, DemandSpec(0, {1}), {1: 9})


@settings(max_examples=300)
@given(st.integers(1, 10), st.integers(1, 40), st.data())
def test_decodes_every_instance(K, t, data):
    M = data.draw(st.integers(0, K - 1))
    seed = data.draw(st.integers(0, 2**32))
    rng = np.random.default_rng(seed)
    db = Database.random(K, t, rng)
    from pirsi.core import sample_demand
    spec = sample_demand(K, M, rng)
    msg, q, ans = pc.fetch_local(db, spec, rng)
    assert msg == db.messages[spec.W]
    assert len(ans.sums) == -(-K // (M + 1))


def test_unshuffled_variant_puts_demand_first():
    dist = pc.enumerate_unshuffled_queries(DemandSpec(2, {0}), 4)
    assert all(2 in q[0] for q in dist)
