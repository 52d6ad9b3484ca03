"""Single-server W-private retrieval by partitioning and summing.

The user splits ``[K]`` into ``g = ceil(K/(M+1))`` parts so that the part
holding the demand is covered by the side information, sends the parts in a
random order, and receives one XOR-sum per part.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .audit import QueryDistribution
from .core import (
    CapacityError,
    Database,
    DecodeError,
    DemandSpec,
    ParameterError,
    ProtocolError,
    as_rng,
    check_km,
    xor_all,
)

MAX_ENUM_K = 10


def num_parts(K: int, M: int) -> int:
    check_km(K, M)
    return -(-K // (M + 1))


def part_sizes(K: int, M: int) -> list[int]:
    """Sizes of the labeled parts P_1..P_g; only the last may be short."""
    g = num_parts(K, M)
    return [M + 1] * (g - 1) + [K - (g - 1) * (M + 1)]


def canonical_partition(parts) -> tuple[tuple[int, ...], ...]:
    return tuple(sorted(tuple(sorted(p)) for p in parts))


@dataclass(frozen=True)
class Partition:
    K: int
    parts: tuple[frozenset[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(frozenset(p) for p in self.parts))
        seen = set()
        for p in self.parts:
            if not p or seen & p:
                raise ParameterError("parts must be nonempty and pairwise disjoint")
            seen |= p
        if seen != set(range(self.K)):
            raise ParameterError("parts do not cover [K]")

    def part_of(self, j: int) -> frozenset[int]:
        return next(p for p in self.parts if j in p)

    def canonical(self):
        return canonical_partition(self.parts)


@dataclass(frozen=True)
class PartitionQuery:
    """Parts in transmitted order."""

    K: int
    parts: tuple[frozenset[int], ...]

    @property
    def vectors(self) -> list[tuple[int, ...]]:
        return [tuple(int(j in p) for j in range(self.K)) for p in self.parts]

    @classmethod
    def from_vectors(cls, vectors) -> PartitionQuery:
        vectors = [tuple(v) for v in vectors]
        K = len(vectors[0]) if vectors else 0
        if any(len(v) != K for v in vectors):
            raise ProtocolError("characteristic vectors differ in length")
        parts = tuple(frozenset(j for j, b in enumerate(v) if b) for v in vectors)
        return cls(K, parts)


@dataclass(frozen=True)
class PartitionAnswer:
    sums: tuple[int, ...]
    t: int


def fill_partition(K: int, spec: DemandSpec, label: int, side_pick, rest_order) -> Partition:
    """Deterministic core of the partition step.

    ``label`` is the (0-based) labeled part that receives the demand,
    ``side_pick`` the side-information indices placed with it when the short
    last part is chosen, and ``rest_order`` the order in which the remaining
    indices are dealt into the other parts.
    """
    M = spec.M
    sizes = part_sizes(K, M)
    g = len(sizes)
    if not 0 <= label < g:
        raise ParameterError(f"label {label} out of range for {g} parts")
    if label < g - 1 or sizes[-1] == M + 1:
        demand_part = {spec.W} | spec.S
    else:
        side_pick = set(side_pick)
        if len(side_pick) != sizes[-1] - 1 or not side_pick <= spec.S:
            raise ParameterError("side_pick must be a subset of S filling the last part")
        demand_part = {spec.W} | side_pick
    rest = list(rest_order)
    if sorted(rest) != sorted(set(range(K)) - demand_part):
        raise ParameterError("rest_order must list exactly the unplaced indices")
    parts = []
    pos = 0
    for i, size in enumerate(sizes):
        if i == label:
            parts.append(frozenset(demand_part))
        else:
            parts.append(frozenset(rest[pos:pos + size]))
            pos += size
    return Partition(K, tuple(parts))


def build_partition(spec: DemandSpec, K: int, rng=None) -> Partition:
    """Sample the labeled partition P_1..P_g for demand ``spec``."""
    M = spec.M
    check_km(K, M)
    spec.check(K)
    rng = as_rng(rng)
    sizes = part_sizes(K, M)
    g = len(sizes)
    # Label i is chosen with probability sizes[i] / K.
    u = int(rng.integers(K))
    label = min(u // (M + 1), g - 1)
    side_pick = ()
    if label == g - 1 and sizes[-1] < M + 1:
        side = sorted(spec.S)
        side_pick = [side[i] for i in rng.permutation(len(side))[: sizes[-1] - 1]]
        demand_part = {spec.W, *side_pick}
    else:
        demand_part = {spec.W} | spec.S
    remaining = sorted(set(range(K)) - demand_part)
    rest_order = [remaining[i] for i in rng.permutation(len(remaining))]
    return fill_partition(K, spec, label, side_pick, rest_order)


def encode_query(p: Partition, rng=None) -> PartitionQuery:
    rng = as_rng(rng)
    order = rng.permutation(len(p.parts))
    return PartitionQuery(p.K, tuple(p.parts[i] for i in order))


def server_answer(db: Database, q: PartitionQuery) -> PartitionAnswer:
    if q.K != db.K:
        raise ProtocolError(f"query is for K={q.K}, database has K={db.K}")
    sums = []
    for part in q.parts:
        if any(not 0 <= j < db.K for j in part):
            raise ProtocolError("part index out of range")
        sums.append(xor_all(db.messages[j] for j in part))
    return PartitionAnswer(tuple(sums), db.t)


def decode(ans: PartitionAnswer, q: PartitionQuery, spec: DemandSpec, side_values) -> int:
    if len(ans.sums) != len(q.parts):
        raise DecodeError("answer and query have different numbers of parts")
    for part, total in zip(q.parts, ans.sums):
        if spec.W in part:
            missing = part - {spec.W} - set(side_values)
            if missing:
                raise DecodeError(f"part holding the demand needs unknown messages {sorted(missing)}")
            return total ^ xor_all(side_values[j] for j in part if j != spec.W)
    raise DecodeError("no part contains the demand index")


def fetch_local(db: Database, spec: DemandSpec, rng=None):
    """One in-process round: returns (message, query, answer)."""
    rng = as_rng(rng)
    q = encode_query(build_partition(spec, db.K, rng), rng)
    ans = server_answer(db, q)
    return decode(ans, q, spec, db.side_values(spec.S)), q, ans


# -- exact query distribution --------------------------------------------------


def _set_partitions(elems: list[int], sizes: Counter):
    """Every unordered partition of ``elems`` into blocks with the given size counts."""
    if not elems:
        yield []
        return
    first, rest = elems[0], elems[1:]
    for s in sorted(k for k, c in sizes.items() if c > 0):
        for comp in combinations(rest, s - 1):
            remaining = [e for e in rest if e not in comp]
            sizes[s] -= 1
            for tail in _set_partitions(remaining, sizes):
                yield [(first, *comp)] + tail
            sizes[s] += 1


def _uniform_fill(demand_part, K: int, sizes: list[int]):
    """Distribution of the full partition when the rest is dealt uniformly at random."""
    remaining = sorted(set(range(K)) - set(demand_part))
    fills = list(_set_partitions(remaining, Counter(sizes)))
    p = Fraction(1, len(fills))
    head = tuple(sorted(demand_part))
    for blocks in fills:
        yield tuple(sorted([head, *blocks])), p


def partition_distribution(spec: DemandSpec, K: int) -> dict:
    """Exact probability of each unordered partition given (W, S)."""
    M = spec.M
    check_km(K, M)
    spec.check(K)
    if K > MAX_ENUM_K:
        raise CapacityError(f"exact enumeration supports K <= {MAX_ENUM_K}, got {K}")
    sizes = part_sizes(K, M)
    g = len(sizes)
    r = sizes[-1]
    dist = defaultdict(Fraction)
    # A full-size labeled part takes the demand: probability (g-1)(M+1)/K.
    p_full = Fraction((g - 1) * (M + 1), K)
    if p_full:
        for key, p in _uniform_fill({spec.W} | spec.S, K, sizes[:-1][:-1] + [r]):
            dist[key] += p_full * p
    # The last part takes the demand plus r-1 random side-information indices.
    picks = list(combinations(sorted(spec.S), r - 1))
    p_pick = Fraction(r, K) / len(picks)
    for pick in picks:
        for key, p in _uniform_fill({spec.W, *pick}, K, sizes[:-1]):
            dist[key] += p_pick * p
    return dict(dist)


def enumerate_queries(spec: DemandSpec, K: int) -> QueryDistribution:
    """Query distribution over unordered partitions (transmit order carries no information)."""
    return QueryDistribution(partition_distribution(spec, K))


def enumerate_unshuffled_queries(spec: DemandSpec, K: int) -> QueryDistribution:
    """Deliberately leaky variant: the demand's part is always transmitted first."""
    out = defaultdict(Fraction)
    for key, p in partition_distribution(spec, K).items():
        head = next(b for b in key if spec.W in b)
        out[(head, *(b for b in key if b != head))] += p
    return QueryDistribution(dict(out))


def sample_query_ordered(spec: DemandSpec, K: int, rng, shuffle: bool = True):
    """Transmitted (ordered) query, canonicalized within parts, for statistical audits."""
    p = build_partition(spec, K, rng)
    if shuffle:
        parts = encode_query(p, rng).parts
    else:
        head = p.part_of(spec.W)
        parts = (head, *sorted((b for b in p.parts if b != head), key=sorted))
    return tuple(tuple(sorted(b)) for b in parts)
