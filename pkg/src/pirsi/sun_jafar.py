"""Replicated-server PIR without side information (Sun-Jafar construction).

``g`` messages of ``L = N**g`` bits live on ``N`` non-colluding servers.  The
user privately permutes the bits of every message, then builds queries round
by round: round 1 asks each server for one bit of every message; round k
asks every server for k-sums, mixing a fresh desired bit into each
(k-1)-sum of undesired bits that another server answered in the previous
round (exploitation), and adding (N-1)**(k-1) fresh k-sums over every
k-subset of undesired messages (symmetry).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import NamedTuple

from .core import DecodeError, ParameterError, ProtocolError, as_rng, get_bit


class SymbolRef(NamedTuple):
    message: int
    slot: int


Atom = tuple  # tuple[SymbolRef, ...] sorted by message


@dataclass(frozen=True)
class SjTranscript:
    N: int
    g: int
    theta: int
    per_server_atoms: tuple[tuple[Atom, ...], ...]
    # (server, atom index) -> (other server, atom index) holding the undesired part
    exploit_map: dict = field(default_factory=dict)
    # permutations[i][slot] = real bit position of message i
    permutations: tuple[tuple[int, ...], ...] = ()

    @property
    def L(self) -> int:
        return self.N ** self.g

    def wire_atoms(self, server: int) -> list[tuple[tuple[int, int], ...]]:
        """Atoms with private slots replaced by real bit positions."""
        perms = self.permutations
        return [tuple((r.message, perms[r.message][r.slot]) for r in atom)
                for atom in self.per_server_atoms[server]]


def build_queries(N: int, g: int, theta: int, rng=None, permute: bool = True) -> SjTranscript:
    """Queries for all N servers to retrieve message ``theta``."""
    if N < 2:
        raise ParameterError("the replicated scheme needs N >= 2 servers")
    if g < 1 or not 0 <= theta < g:
        raise ParameterError(f"need g >= 1 and 0 <= theta < g, got g={g}, theta={theta}")
    rng = as_rng(rng)
    L = N ** g
    counters = [0] * g

    def fresh(i):
        counters[i] += 1
        return SymbolRef(i, counters[i] - 1)

    atoms = [[] for _ in range(N)]
    by_round = [[[] for _ in range(g + 1)] for _ in range(N)]
    exploit = {}

    def add(n, k, atom):
        atoms[n].append(tuple(sorted(atom)))
        by_round[n][k].append(len(atoms[n]) - 1)
        return len(atoms[n]) - 1

    for n in range(N):
        for i in range(g):
            add(n, 1, [fresh(i)])
    undesired = [i for i in range(g) if i != theta]
    for k in range(2, g + 1):
        for n in range(N):
            for m in range(N):
                if m == n:
                    continue
                for idx in by_round[m][k - 1]:
                    src = atoms[m][idx]
                    if any(r.message == theta for r in src):
                        continue
                    new = add(n, k, [*src, fresh(theta)])
                    exploit[(n, new)] = (m, idx)
            for T in combinations(undesired, k):
                for _ in range((N - 1) ** (k - 1)):
                    add(n, k, [fresh(i) for i in T])
    assert counters[theta] == L and max(counters) <= L

    if permute:
        perms = tuple(tuple(int(p) for p in rng.permutation(L)) for _ in range(g))
    else:
        perms = tuple(tuple(range(L)) for _ in range(g))
    # Shuffle each server's list and carry the exploit pairing through.
    orders = [rng.permutation(len(a)) for a in atoms]
    where = [{int(old): new for new, old in enumerate(order)} for order in orders]
    shuffled = tuple(tuple(atoms[n][int(old)] for old in orders[n]) for n in range(N))
    exploit_map = {(n, where[n][i]): (m, where[m][j]) for (n, i), (m, j) in exploit.items()}
    return SjTranscript(N, g, theta, shuffled, exploit_map, perms)


def server_answer(supermessages, atoms, nbits: int) -> list[int]:
    """XOR of the referenced bits for each wire atom, in order."""
    out = []
    for atom in atoms:
        bit = 0
        for msg, pos in atom:
            if not 0 <= msg < len(supermessages) or not 0 <= pos < nbits:
                raise ProtocolError(f"symbol reference {(msg, pos)} out of range")
            bit ^= get_bit(supermessages[msg], pos, nbits)
        out.append(bit)
    return out


def decode(transcript: SjTranscript, answers) -> int:
    """Rebuild the desired message (L bits, as an int) from all servers' answers."""
    tr = transcript
    if len(answers) != tr.N or any(len(a) != len(s) for a, s in zip(answers, tr.per_server_atoms)):
        raise DecodeError("answers do not align with the queries")
    values = {}
    for n, atoms in enumerate(tr.per_server_atoms):
        for idx, atom in enumerate(atoms):
            mine = [r for r in atom if r.message == tr.theta]
            if not mine:
                continue
            v = answers[n][idx]
            if len(atom) > 1:
                try:
                    m, j = tr.exploit_map[(n, idx)]
                except KeyError:
                    raise DecodeError(f"no exploitation partner for atom {idx} at server {n}") from None
                v ^= answers[m][j]
            values[mine[0].slot] = v
    L = tr.L
    if len(values) != L:
        raise DecodeError(f"recovered {len(values)} of {L} desired bits")
    perm = tr.permutations[tr.theta]
    out = 0
    for slot, v in values.items():
        out |= v << (L - 1 - perm[slot])
    return out


def download_cost(N: int, g: int) -> tuple[int, Fraction]:
    """Total downloaded bits across servers, and the rate N**g / total."""
    if N < 2:
        raise ParameterError("the replicated scheme needs N >= 2 servers")
    total = N * (N ** g - 1) // (N - 1)
    return total, Fraction(N ** g, total)


def subset_counts(atoms) -> Counter:
    """How many atoms a server got over each message subset."""
    return Counter(frozenset(r[0] for r in atom) for atom in atoms)


def canonical_shape(wire_atoms) -> tuple:
    """Server's view with bit positions replaced by their per-message rank."""
    used = {}
    for atom in wire_atoms:
        for msg, pos in atom:
            used.setdefault(msg, set()).add(pos)
    rank = {m: {p: r for r, p in enumerate(sorted(ps))} for m, ps in used.items()}
    return tuple(sorted(tuple((m, rank[m][p]) for m, p in atom) for atom in wire_atoms))


def shape_sampler(N: int, g: int, server: int = 0):
    """For audit_statistical: hypothesis is theta, sample is one server's shape."""

    def sample(theta, rng):
        return canonical_shape(build_queries(N, g, theta, rng).wire_atoms(server))

    return sample
