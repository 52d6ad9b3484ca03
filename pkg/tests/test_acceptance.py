"""Acceptance suite: one group of tests per criterion, summarized at the end of the run."""

from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pirsi import audit, bounds, mds, multiserver, net, partition, sun_jafar, wire
from pirsi.core import Database, DemandSpec, ProblemParams, all_demands, sample_demand
from pirsi.gf_field import default_field

criterion = pytest.mark.criterion


def _demand(rng, K, M):
    return sample_demand(K, M, rng)


# 1 --------------------------------------------------------------------------

@criterion(1, "partition fetch downloads ceil(K/(M+1)) t bits, K <= 10")
def test_c01_partition_rate():
    rng = np.random.default_rng(1)
    for K in range(1, 11):
        for M in range(K):
            db = Database.random(K, 8, rng)
            spec = _demand(rng, K, M)
            res = net.fetch_loopback(db, net.SessionConfig("partition", K=K, M=M, t=8), spec, rng)
            assert res.message == db[spec.W]
            assert res.rate.total_answer_bits == -(-K // (M + 1)) * db.t
            assert res.rate.rate == bounds.capacity_w(K, M)


# 2 --------------------------------------------------------------------------

@criterion(2, "MDS fetch downloads (K-M) t bits, K <= 10")
def test_c02_mds_rate():
    rng = np.random.default_rng(2)
    for K in range(1, 11):
        for M in range(K):
            db = Database.random(K, 8, rng)
            spec = _demand(rng, K, M)
            res = net.fetch_loopback(db, net.SessionConfig("mds", K=K, M=M, t=8), spec, rng)
            assert res.message == db[spec.W]
            assert res.rate.total_answer_bits == (K - M) * db.t
            assert res.rate.rate == bounds.capacity_ws(K, M)


# 3 --------------------------------------------------------------------------

@criterion(3, "multiserver N=2 K=4: 6 bits with M=1, 30 bits with M=0")
@pytest.mark.parametrize("M,t,bits,rate", [(1, 4, 6, Fraction(2, 3)), (0, 16, 30, Fraction(8, 15))])
def test_c03_multiserver_rate(M, t, bits, rate):
    for seed in range(10):
        db = Database.random(4, t, seed)
        spec = _demand(seed, 4, M)
        res = net.fetch_loopback(db, net.SessionConfig("multiserver", K=4, M=M, N=2, t=t), spec, seed)
        assert res.message == db[spec.W]
        assert res.rate.total_answer_bits == bits
        assert res.rate.rate == rate == bounds.multiserver_rate_lb(2, 4, M)


# 4 --------------------------------------------------------------------------

W_PRIVATE_CASES = [(K, M) for K in range(1, 7) for M in range(min(2, K - 1) + 1)] + [(7, 2)]


@criterion(4, "partition scheme: exact W-posterior deviation 0")
@pytest.mark.parametrize("K,M", W_PRIVATE_CASES)
def test_c04_partition_w_private(K, M):
    rep = audit.audit_w(partition.enumerate_queries, K, M)
    assert rep.max_posterior_deviation == 0
    assert isinstance(rep.max_posterior_deviation, Fraction)


# 5 --------------------------------------------------------------------------

@criterion(5, "MDS scheme: exact (W,S)-posterior deviation 0, uniform and 5 random priors")
@pytest.mark.parametrize("K", range(1, 7))
def test_c05_mds_ws_private(K):
    rng = np.random.default_rng(K)
    for M in range(K):
        assert audit.audit_ws(mds.enumerate_queries, K, M).max_posterior_deviation == 0
        for _ in range(5):
            prior = audit.random_prior(K, M, rng)
            assert audit.audit_ws(mds.enumerate_queries, K, M, prior).max_posterior_deviation == 0


# 6 --------------------------------------------------------------------------

@criterion(6, "negative controls: partition leaks S, unshuffled variant leaks W")
def test_c06_negative_controls():
    assert audit.audit_ws(partition.enumerate_queries, 4, 1).max_posterior_deviation > 0
    assert audit.audit_w(partition.enumerate_queries, 4, 1).max_posterior_deviation == 0
    assert audit.audit_w(partition.enumerate_unshuffled_queries, 4, 1).max_posterior_deviation > 0


@criterion(6, "negative controls: partition leaks S, unshuffled variant leaks W")
@settings(max_examples=30, deadline=None)
@given(st.integers(3, 6).flatmap(lambda K: st.tuples(st.just(K), st.integers(1, K - 2))))
def test_c06_unshuffled_leaks_everywhere(km):
    K, M = km
    assert audit.audit_w(partition.enumerate_unshuffled_queries, K, M).max_posterior_deviation > 0


# 7 --------------------------------------------------------------------------

@criterion(7, "Sun-Jafar atom counts and the two-server two-message table")
def test_c07_sun_jafar_structure():
    for N in (2, 3):
        for g in range(1, 5):
            expected = {frozenset(T): (N - 1) ** (len(T) - 1)
                        for k in range(1, g + 1) for T in combinations(range(g), k)}
            for theta in range(g):
                tr = sun_jafar.build_queries(N, g, theta, rng=theta)
                for n in range(N):
                    assert dict(sun_jafar.subset_counts(tr.wire_atoms(n))) == expected
    tr = sun_jafar.build_queries(2, 2, 0, rng=0, permute=False)
    assert set(tr.wire_atoms(0)) == {((0, 0),), ((1, 0),), ((0, 2), (1, 1))}
    assert set(tr.wire_atoms(1)) == {((0, 1),), ((1, 1),), ((0, 3), (1, 0))}


# 8 --------------------------------------------------------------------------

@criterion(8, "100-seed round trips for all three schemes; MDS recovers every unknown")
def test_c08_round_trips():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        db = Database.random(8, 16, rng)
        spec = _demand(rng, 8, 2)
        assert partition.fetch_local(db, spec, rng)[0] == db[spec.W]

        db = Database.random(6, 8, rng)
        spec = _demand(rng, 6, 1)
        assert multiserver.fetch_local(db, spec, 2, rng)[0] == db[spec.W]

        db = Database.random(4, 16, rng)
        spec = _demand(rng, 4, 3)
        assert mds.fetch_local(db, spec)[0] == db[spec.W]


@criterion(8, "100-seed round trips for all three schemes; MDS recovers every unknown")
def test_c08_mds_every_side_set():
    rng = np.random.default_rng(8)
    for K in range(1, 7):
        for M in range(K):
            db = Database.random(K, 8, rng)
            code = mds.code_for(db, M)
            ans = mds.server_answer(db, mds.MdsQuery(M), code)
            for S in combinations(range(K), M):
                out = mds.decode(ans, code, S, db.side_values(S), db.t)
                assert out == {j: db[j] for j in range(K) if j not in S}


# 9 --------------------------------------------------------------------------

@criterion(9, "answer rows solve their index-coding instances; no short code at K=3, M=1")
def test_c09_index_coding_bridge():
    rng = np.random.default_rng(9)
    gf2 = default_field(1)
    for K in range(1, 6):
        for M in range(min(2, K - 1) + 1):
            for spec in all_demands(K, M):
                q = partition.encode_query(partition.build_partition(spec, K, rng), rng)
                inst = bounds.lemma1_instance(K, spec.W, spec.S, bounds.partition_side_sets(K, M, q.parts))
                assert bounds.verify_linear_index_code(bounds.partition_rows(K, q.parts), inst, gf2)
            f = mds.choose_field(K, M, 8)
            code = mds.make_code(K, M, f)
            inst = bounds.lemma4_instance(K, M)
            assert len(inst.clients) == (K - M) * len(list(combinations(range(K), M)))
            assert bounds.verify_linear_index_code(bounds.LinearEncoding(code.parity_matrix), inst, f)


@criterion(9, "answer rows solve their index-coding instances; no short code at K=3, M=1")
def test_c09_exhaustive_short_codes():
    gf4 = default_field(2)
    assert not bounds.exists_code_with_rows(3, 1, 1, gf4)
    assert bounds.exists_code_with_rows(3, 1, 2, gf4)
    assert bounds.lemma5_lower_bound(3, 1) == 2


# 10 -------------------------------------------------------------------------

@criterion(10, "greedy acyclic set reaches ceil(K/(M+1)) on 1000 random regular graphs")
def test_c10_greedy_bound():
    rng = np.random.default_rng(10)
    for _ in range(1000):
        K = int(rng.integers(1, 13))
        M = int(rng.integers(0, min(3, K - 1) + 1))
        g = bounds.SideInfoGraph.random_regular(K, M, rng)
        Z = bounds.mais_greedy(g, rng)
        assert bounds.induces_acyclic(g, Z)
        assert len(Z) >= -(-K // (M + 1))


# 11 -------------------------------------------------------------------------

def _random_config(rng):
    scheme = ["partition", "mds", "multiserver"][int(rng.integers(3))]
    if scheme == "multiserver":
        N = int(rng.integers(2, 4))
        M = int(rng.integers(0, 3))
        g = int(rng.integers(1, 4)) if N == 2 else int(rng.integers(1, 3))
        K = g * (M + 1)
        t = N ** g
    else:
        N = 1
        K = int(rng.integers(1, 9))
        M = int(rng.integers(0, K))
        t = int(rng.integers(1, 20))
    return scheme, K, M, N, t


@criterion(11, "TCP and in-process transcripts identical; 10^4 encoding round trips")
def test_c11_tcp_matches_in_process():
    rng = np.random.default_rng(11)
    for i in range(50):
        scheme, K, M, N, t = _random_config(rng)
        db = Database.random(K, t, rng)
        spec = _demand(rng, K, M)
        servers = [net.start_server(db) for _ in range(N)]
        try:
            cfg = net.SessionConfig(scheme, K=K, M=M, N=N, t=t, servers=[s.address for s in servers])
            remote = net.fetch(cfg, spec, db.side_values(spec.S), rng=1000 + i)
            local = net.fetch_loopback(db, net.SessionConfig(scheme, K=K, M=M, N=N, t=t), spec, rng=1000 + i)
        finally:
            for s in servers:
                s.shutdown()
                s.server_close()
        assert remote.message == local.message == db[spec.W]
        assert remote.transcript.to_json() == local.transcript.to_json()
        assert [(e.request, e.response) for e in remote.transcript.exchanges] == \
               [(e.request, e.response) for e in local.transcript.exchanges]


@st.composite
def _partitions(draw):
    K = draw(st.integers(1, 24))
    labels = draw(st.lists(st.integers(0, 5), min_size=K, max_size=K))
    parts = {}
    for j, lab in enumerate(labels):
        parts.setdefault(lab, set()).add(j)
    return K, tuple(frozenset(p) for p in parts.values())


def _round_trips(kind, data):
    if kind == "frame":
        t, p = data
        return wire.decode_frame(wire.encode_frame(t, p)) == (t, p)
    if kind == "partition":
        return wire.decode_partition_block(wire.encode_partition_block(*data)) == data
    if kind == "sj":
        (K, parts), atoms = data
        return wire.decode_sj_query(wire.encode_sj_query(K, parts, atoms)) == (K, parts, atoms)
    if kind == "bits":
        return wire.decode_bits(wire.encode_bits(data)) == data
    if kind == "mds":
        return wire.decode_mds_query(wire.encode_mds_query(data)) == data
    if kind == "db":
        K, t, seed = data
        db = Database.random(K, t, seed)
        return Database.from_bytes(db.to_bytes()) == db
    t, sums = data
    return wire.decode_sums(wire.encode_sums(sums, t), t) == tuple(sums)


_atoms = st.lists(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 2 ** 32 - 1)), min_size=1, max_size=3)
                  .map(tuple), max_size=4)
_payloads = st.one_of(
    st.tuples(st.just("frame"), st.tuples(st.integers(0, 255), st.binary(max_size=16))),
    st.tuples(st.just("partition"), _partitions()),
    st.tuples(st.just("sj"), st.tuples(_partitions(), _atoms)),
    st.tuples(st.just("bits"), st.lists(st.integers(0, 1), max_size=40)),
    st.tuples(st.just("mds"), st.integers(0, 65535)),
    st.tuples(st.just("db"), st.tuples(st.integers(1, 10), st.integers(1, 40), st.integers(0, 2 ** 32))),
    st.tuples(st.just("sums"), st.integers(1, 40).flatmap(
        lambda t: st.tuples(st.just(t), st.lists(st.integers(0, 2 ** t - 1), max_size=4)))),
)


@criterion(11, "TCP and in-process transcripts identical; 10^4 encoding round trips")
@settings(max_examples=10_000, deadline=None)
@given(_payloads)
def test_c11_encoding_round_trips(case):
    assert _round_trips(*case)

