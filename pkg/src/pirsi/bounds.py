"""Capacity formulas and converse-side checks.

Includes the greedy acyclic-set procedure on side-information graphs and a
rank test deciding whether a linear code solves an index-coding instance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product

from .core import ParameterError, as_rng, check_km
from .gf_field import FieldSpec, rank


def capacity_w(K: int, M: int) -> Fraction:
    check_km(K, M)
    return Fraction(1, -(-K // (M + 1)))


def capacity_ws(K: int, M: int) -> Fraction:
    check_km(K, M)
    return Fraction(1, K - M)


def multiserver_rate_lb(N: int, K: int, M: int) -> Fraction:
    check_km(K, M)
    if N < 1:
        raise ParameterError("need N >= 1")
    if K % (M + 1):
        raise ParameterError(f"(M+1) must divide K, got K={K}, M={M}")
    g = K // (M + 1)
    return 1 / sum(Fraction(1, N ** k) for k in range(g))


def lemma5_lower_bound(K: int, M: int) -> int:
    """Fewest rows of any linear code solving the all-(demand, side set) instance."""
    check_km(K, M)
    return K - M


# -- side-information graphs ---------------------------------------------------


@dataclass(frozen=True)
class SideInfoGraph:
    K: int
    out_neighbors: tuple[frozenset[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "out_neighbors", tuple(frozenset(n) for n in self.out_neighbors))
        if len(self.out_neighbors) != self.K:
            raise ParameterError("need one neighbor set per vertex")
        for i, nb in enumerate(self.out_neighbors):
            if i in nb:
                raise ParameterError(f"self-loop at vertex {i}")
            if any(not 0 <= j < self.K for j in nb):
                raise ParameterError(f"vertex {i} has an out-of-range neighbor")

    def out_degrees(self) -> list[int]:
        return [len(n) for n in self.out_neighbors]

    @classmethod
    def random_regular(cls, K: int, M: int, rng=None) -> SideInfoGraph:
        """Every vertex points to M distinct uniformly chosen other vertices."""
        check_km(K, M)
        rng = as_rng(rng)
        nbrs = []
        for i in range(K):
            others = [j for j in range(K) if j != i]
            nbrs.append(frozenset(int(j) for j in rng.choice(others, size=M, replace=False)) if M else frozenset())
        return cls(K, tuple(nbrs))

    def to_text(self) -> str:
        return "\n".join(f"{i}: {' '.join(map(str, sorted(n)))}".rstrip()
                         for i, n in enumerate(self.out_neighbors)) + "\n"

    @classmethod
    def from_text(cls, text: str) -> SideInfoGraph:
        entries = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            head, _, tail = line.partition(":")
            entries[int(head)] = frozenset(int(x) for x in tail.split())
        K = len(entries)
        if sorted(entries) != list(range(K)):
            raise ParameterError("vertices must be numbered 0..K-1")
        return cls(K, tuple(entries[i] for i in range(K)))


def mais_greedy(graph: SideInfoGraph, rng=None, mode: str = "random") -> list[int]:
    """Acyclic induced vertex set, in pick order.

    Each pick removes the vertex and its out-neighbors from the candidate
    pool, so an arc inside the result can only point to an earlier pick.
    ``mode="lowest"`` always picks the smallest candidate.
    """
    if mode not in ("random", "lowest"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = as_rng(rng) if mode == "random" else None
    candidates = set(range(graph.K))
    picked = []
    while candidates:
        pool = sorted(candidates)
        i = pool[int(rng.integers(len(pool)))] if rng is not None else pool[0]
        picked.append(i)
        candidates -= graph.out_neighbors[i] | {i}
    return picked


def induces_acyclic(graph: SideInfoGraph, Z) -> bool:
    """Kahn's algorithm on the subgraph induced by Z."""
    Z = set(Z)
    indeg = {v: 0 for v in Z}
    for v in Z:
        for u in graph.out_neighbors[v] & Z:
            indeg[u] += 1
    ready = [v for v, d in indeg.items() if d == 0]
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for u in graph.out_neighbors[v] & Z:
            indeg[u] -= 1
            if indeg[u] == 0:
                ready.append(u)
    return seen == len(Z)


# -- index coding --------------------------------------------------------------


@dataclass(frozen=True)
class IndexCodingInstance:
    K: int
    clients: tuple[tuple[int, frozenset[int]], ...]

    def __post_init__(self):
        object.__setattr__(self, "clients", tuple((int(f), frozenset(s)) for f, s in self.clients))
        for f, s in self.clients:
            if f in s:
                raise ParameterError(f"client demanding {f} already holds it")
            if not 0 <= f < self.K or any(not 0 <= j < self.K for j in s):
                raise ParameterError("client index out of range")


@dataclass(frozen=True)
class LinearEncoding:
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if not self.rows:
            raise ParameterError("a linear encoding needs at least one row")


def client_decodes(rows, K: int, demand: int, side, field: FieldSpec) -> bool:
    """e_demand in span(rows, e_j for j in side)?"""
    # Dropping the side-information coordinates leaves the same question.
    keep = [j for j in range(K) if j not in side]
    proj = [[r[j] for j in keep] for r in rows]
    base = rank(field, proj)
    target = [int(j == demand) for j in keep]
    return rank(field, proj + [target]) == base


def verify_linear_index_code(enc: LinearEncoding, inst: IndexCodingInstance, field: FieldSpec) -> bool:
    if any(len(r) != inst.K for r in enc.rows):
        raise ParameterError("coefficient vectors must have length K")
    for r in enc.rows:
        for c in r:
            field.check(c)
    return all(client_decodes(enc.rows, inst.K, f, s, field) for f, s in inst.clients)


def lemma1_instance(K: int, W: int, S, side_sets) -> IndexCodingInstance:
    """K clients: the demand's client holds S, client i != W holds side_sets[i]."""
    clients = []
    for i in range(K):
        clients.append((i, frozenset(S) if i == W else frozenset(side_sets[i])))
    return IndexCodingInstance(K, tuple(clients))


def lemma4_instance(K: int, M: int) -> IndexCodingInstance:
    """A client for every demand i and every M-set of other messages."""
    check_km(K, M)
    clients = []
    for i in range(K):
        others = [j for j in range(K) if j != i]
        clients.extend((i, frozenset(s)) for s in combinations(others, M))
    return IndexCodingInstance(K, tuple(clients))


def partition_side_sets(K: int, M: int, parts) -> dict[int, frozenset[int]]:
    """For each i, an M-set from which i is decodable given the partition sums.

    The other members of i's part suffice; the set is padded with the
    smallest indices outside the part.
    """
    out = {}
    for p in parts:
        for i in p:
            side = set(p) - {i}
            for j in range(K):
                if len(side) >= M:
                    break
                if j not in p:
                    side.add(j)
            out[i] = frozenset(side)
    return out


def partition_rows(K: int, parts) -> LinearEncoding:
    return LinearEncoding(tuple(tuple(int(j in p) for j in range(K)) for p in parts))


def exists_code_with_rows(K: int, M: int, nrows: int, field: FieldSpec, inst=None) -> bool:
    """Exhaustive search for an ``nrows``-row linear code solving ``inst``.

    Searches row-reduced generators only: a code's decodability depends on
    its row space, so enumerating each subspace once is enough.
    """
    inst = inst or lemma4_instance(K, M)
    q = field.order
    vectors = [v for v in product(range(q), repeat=K) if any(v)]
    # Normalize: first nonzero coefficient 1 (scalar multiples span the same line).
    lines = [v for v in vectors if next(c for c in v if c) == 1]
    for rows in combinations(lines, nrows):
        if rank(field, [list(r) for r in rows]) < nrows:
            continue
        if verify_linear_index_code(LinearEncoding(rows), inst, field):
            return True
    return False
