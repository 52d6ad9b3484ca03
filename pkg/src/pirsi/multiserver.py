"""Multi-server W-private retrieval with side information.

Partition ``[K]`` into ``g = K/(M+1)`` parts with the demand and its side
information together, XOR each part into a super-message, then run the
replicated Sun-Jafar scheme over the super-messages.  Messages must be
``t = N**g`` bits long.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import sun_jafar
from .core import (
    Database,
    DecodeError,
    DemandSpec,
    ParameterError,
    ProblemParams,
    ProtocolError,
    as_rng,
    xor_all,
)


@dataclass(frozen=True)
class SuperMessageQuery:
    K: int
    partition: tuple[frozenset[int], ...]  # transmitted order, identical for every server
    sj: sun_jafar.SjTranscript

    @property
    def N(self) -> int:
        return self.sj.N

    def server_atoms(self, n: int):
        return self.sj.wire_atoms(n)


@dataclass(frozen=True)
class DecodeContext:
    spec: DemandSpec
    theta: int
    t: int


def check_params(params: ProblemParams) -> int:
    N, K, M, t = params.N, params.K, params.M, params.t
    if N < 2:
        raise ParameterError("multi-server scheme needs N >= 2 (use the partition scheme for N = 1)")
    if K % (M + 1):
        raise ParameterError(f"(M+1) must divide K, got K={K}, M={M}")
    g = K // (M + 1)
    if t != N ** g:
        raise ParameterError(f"messages must be N**(K/(M+1)) = {N ** g} bits, got t={t}")
    return g


def build(spec: DemandSpec, params: ProblemParams, rng=None) -> tuple[SuperMessageQuery, DecodeContext]:
    g = check_params(params)
    K, M = params.K, params.M
    spec.check(K)
    if spec.M != M:
        raise ParameterError(f"|S| = {spec.M} but M = {M}")
    part_rng, sj_rng = as_rng(rng).spawn(2)
    first = frozenset({spec.W} | spec.S)
    rest = [j for j in range(K) if j not in first]
    rest = [rest[i] for i in part_rng.permutation(len(rest))]
    parts = [first] + [frozenset(rest[i:i + M + 1]) for i in range(0, len(rest), M + 1)]
    order = part_rng.permutation(g)
    sent = tuple(parts[int(i)] for i in order)
    theta = sent.index(first)
    sj = sun_jafar.build_queries(params.N, g, theta, sj_rng)
    return SuperMessageQuery(K, sent, sj), DecodeContext(spec, theta, params.t)


def form_supermessages(db: Database, partition) -> list[int]:
    covered = [j for p in partition for j in p]
    if sorted(covered) != list(range(db.K)):
        raise ProtocolError("partition is not a disjoint cover of the database")
    return [xor_all(db.messages[j] for j in p) for p in partition]


def server_answer(db: Database, partition, wire_atoms) -> list[int]:
    return sun_jafar.server_answer(form_supermessages(db, partition), wire_atoms, db.t)


def decode(sj_answers, query: SuperMessageQuery, context: DecodeContext, side_values) -> int:
    wanted = sun_jafar.decode(query.sj, sj_answers)
    part = query.partition[context.theta]
    if context.spec.W not in part:
        raise DecodeError("demand is not in the decoded super-message")
    return wanted ^ xor_all(side_values[j] for j in part if j != context.spec.W)


def fetch_local(db: Database, spec: DemandSpec, N: int, rng=None):
    params = ProblemParams(N, db.K, spec.M, db.t)
    query, ctx = build(spec, params, rng)
    answers = [server_answer(db, query.partition, query.server_atoms(n)) for n in range(N)]
    return decode(answers, query, ctx, db.side_values(spec.S)), query, answers
