"""Single-server (W,S)-private retrieval with a systematic Cauchy MDS code.

The server returns the K-M parity symbols of a systematic (2K-M, K) code;
any M known messages plus those parities determine every other message.
"""

from __future__ import annotations

from dataclasses import dataclass

from .audit import QueryDistribution
from .core import Database, DecodeError, DemandSpec, ParameterError, ProtocolError, check_km
from .gf_field import DEFAULT_POLYS, FieldSpec, default_field, mat_vec, solve


@dataclass(frozen=True)
class MdsCodeSpec:
    K: int
    M: int
    field: FieldSpec
    parity_matrix: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return 2 * self.K - self.M

    def generator(self) -> list[list[int]]:
        """Systematic generator: K identity rows followed by the parity rows."""
        ident = [[int(i == j) for j in range(self.K)] for i in range(self.K)]
        return ident + [list(r) for r in self.parity_matrix]


@dataclass(frozen=True)
class MdsQuery:
    M: int


@dataclass(frozen=True)
class MdsAnswer:
    """``parities[i]`` is parity symbol i as a vector of field elements (one per chunk)."""

    parities: tuple[tuple[int, ...], ...]


def make_code(K: int, M: int, field: FieldSpec) -> MdsCodeSpec:
    """Cauchy parity block with x = 0..K-M-1 and y = K-M..2K-M-1."""
    check_km(K, M)
    if field.order < 2 * K - M:
        raise ParameterError(
            f"GF(2^{field.t}) has {field.order} elements; a (2K-M, K) code needs 2^t >= {2 * K - M}"
        )
    r = K - M
    xs = range(r)
    ys = range(r, r + K)
    parity = tuple(tuple(field.inv(x ^ y) for y in ys) for x in xs)
    return MdsCodeSpec(K, M, field, parity)


def choose_field(K: int, M: int, t: int) -> FieldSpec:
    """Smallest default field that is large enough, preferring widths dividing t.

    A divisor of ``t`` keeps the download at exactly (K-M) * t bits.
    """
    need = 2 * K - M
    widths = [d for d in sorted(DEFAULT_POLYS) if (1 << d) >= need]
    if not widths:
        raise ParameterError(f"no default field with at least {need} elements")
    divisors = [d for d in widths if t % d == 0]
    return default_field(divisors[0] if divisors else widths[0])


def chunk_count(t: int, field: FieldSpec) -> int:
    return -(-t // field.t)


def split_message(x: int, t: int, field: FieldSpec) -> list[int]:
    c = chunk_count(t, field)
    padded = x << (c * field.t - t)
    mask = field.order - 1
    return [(padded >> (field.t * (c - 1 - i))) & mask for i in range(c)]


def join_message(chunks, t: int, field: FieldSpec) -> int:
    c = len(chunks)
    acc = 0
    for ch in chunks:
        acc = (acc << field.t) | ch
    return acc >> (c * field.t - t)


def answer_bits(code: MdsCodeSpec, t: int) -> int:
    return (code.K - code.M) * chunk_count(t, code.field) * code.field.t


def code_for(db: Database, M: int) -> MdsCodeSpec:
    return make_code(db.K, M, choose_field(db.K, M, db.t))


def server_answer(db: Database, q: MdsQuery, code: MdsCodeSpec | None = None) -> MdsAnswer:
    if not 0 <= q.M < db.K:
        raise ProtocolError(f"announced side-information size {q.M} is not below K={db.K}")
    code = code or code_for(db, q.M)
    if code.K != db.K or code.M != q.M:
        raise ProtocolError("code does not match database and query")
    f = code.field
    chunks = [split_message(x, db.t, f) for x in db.messages]
    per_chunk = [mat_vec(f, code.parity_matrix, [c[k] for c in chunks])
                 for k in range(chunk_count(db.t, f))]
    return MdsAnswer(tuple(tuple(col[i] for col in per_chunk) for i in range(code.K - code.M)))


def decode(ans: MdsAnswer, code: MdsCodeSpec, S, side_values, t: int) -> dict[int, int]:
    """Recover every message outside S; returns {index: message}."""
    S = sorted(set(S))
    if len(S) != code.M:
        raise ParameterError(f"|S| = {len(S)} but the code was built for M = {code.M}")
    if len(ans.parities) != code.K - code.M:
        raise DecodeError("wrong number of parity symbols")
    f = code.field
    unknown = [j for j in range(code.K) if j not in S]
    side_chunks = {j: split_message(side_values[j], t, f) for j in S}
    system = [[row[j] for j in unknown] for row in code.parity_matrix]
    out_chunks = {j: [] for j in unknown}
    for k in range(chunk_count(t, f)):
        rhs = []
        for i, row in enumerate(code.parity_matrix):
            v = ans.parities[i][k]
            for j in S:
                v ^= f.mul(row[j], side_chunks[j][k])
            rhs.append(v)
        try:
            sol = solve(f, system, rhs)
        except ArithmeticError as exc:
            raise AssertionError("parity submatrix singular; MDS property violated") from exc
        for j, v in zip(unknown, sol):
            out_chunks[j].append(v)
    return {j: join_message(ch, t, f) for j, ch in out_chunks.items()}


def enumerate_queries(spec: DemandSpec, K: int) -> QueryDistribution:
    """The query is just M, whatever W and S are."""
    return QueryDistribution({("mds", spec.M): 1})


def fetch_local(db: Database, spec: DemandSpec):
    code = code_for(db, spec.M)
    ans = server_answer(db, MdsQuery(spec.M), code)
    return decode(ans, code, spec.S, db.side_values(spec.S), db.t)[spec.W], ans
