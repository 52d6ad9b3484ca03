"""Problem model shared by every scheme: database, demand, prior, rate.

Indices are 0-based throughout: messages are ``0..K-1``.  A message of ``t``
bits is stored as an int whose most significant of the ``t`` bits is bit
(symbol) 0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from pathlib import Path

import numpy as np

DB_MAGIC = b"PIRDB1"


class PirError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(PirError, ValueError):
    """Scheme parameters violate a precondition."""


class ProtocolError(PirError):
    """A query or answer is malformed or inconsistent with the database."""


class DecodeError(PirError):
    """The transcript cannot be decoded (corrupted or mismatched)."""


class CapacityError(PirError):
    """An exact enumeration would exceed the supported instance size."""


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# -- bit packing -------------------------------------------------------------


def pack_bits(value: int, nbits: int) -> bytes:
    """High bits first, zero padding at the end of the final byte."""
    nbytes = (nbits + 7) // 8
    return (value << (8 * nbytes - nbits)).to_bytes(nbytes, "big")


def unpack_bits(data: bytes, nbits: int) -> int:
    nbytes = (nbits + 7) // 8
    if len(data) != nbytes:
        raise ValueError(f"expected {nbytes} bytes for {nbits} bits, got {len(data)}")
    raw = int.from_bytes(data, "big")
    pad = 8 * nbytes - nbits
    if raw & ((1 << pad) - 1):
        raise ValueError("nonzero padding bits")
    return raw >> pad


def get_bit(value: int, pos: int, nbits: int) -> int:
    """Symbol ``pos`` of a ``nbits``-long message (0 = first/most significant)."""
    return (value >> (nbits - 1 - pos)) & 1


def xor_all(values) -> int:
    acc = 0
    for v in values:
        acc ^= v
    return acc


# -- domain types ------------------------------------------------------------


@dataclass(frozen=True)
class Database:
    K: int
    t: int
    messages: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(int(m) for m in self.messages))
        if self.K < 1 or self.t < 1:
            raise ParameterError("database needs K >= 1 and t >= 1")
        if len(self.messages) != self.K:
            raise ParameterError(f"expected {self.K} messages, got {len(self.messages)}")
        for m in self.messages:
            if not 0 <= m < (1 << self.t):
                raise ParameterError(f"message {m:#x} is longer than {self.t} bits")

    @classmethod
    def random(cls, K: int, t: int, rng=None) -> Database:
        rng = as_rng(rng)
        nbytes = (t + 7) // 8
        msgs = []
        for _ in range(K):
            raw = int.from_bytes(rng.bytes(nbytes), "big")
            msgs.append(raw >> (8 * nbytes - t))
        return cls(K, t, tuple(msgs))

    def __getitem__(self, j: int) -> int:
        return self.messages[j]

    def side_values(self, S) -> dict[int, int]:
        return {j: self.messages[j] for j in S}

    def to_bytes(self) -> bytes:
        out = [DB_MAGIC, struct.pack(">HI", self.K, self.t)]
        out.extend(pack_bits(m, self.t) for m in self.messages)
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> Database:
        if data[:6] != DB_MAGIC:
            raise ProtocolError("not a PIRDB1 file")
        K, t = struct.unpack(">HI", data[6:12])
        rec = (t + 7) // 8
        body = data[12:]
        if len(body) != K * rec:
            raise ProtocolError(f"expected {K * rec} record bytes, found {len(body)}")
        msgs = tuple(unpack_bits(body[i * rec:(i + 1) * rec], t) for i in range(K))
        return cls(K, t, msgs)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> Database:
        return cls.from_bytes(Path(path).read_bytes())


@dataclass(frozen=True)
class DemandSpec:
    W: int
    S: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "S", frozenset(self.S))
        if self.W in self.S:
            raise ParameterError("demand index must not be in the side information")

    @property
    def M(self) -> int:
        return len(self.S)

    def check(self, K: int) -> None:
        if not 0 <= self.W < K or any(not 0 <= j < K for j in self.S):
            raise ParameterError(f"indices out of range for K={K}")


@dataclass(frozen=True)
class ProblemParams:
    N: int
    K: int
    M: int
    t: int

    def __post_init__(self):
        if self.N < 1:
            raise ParameterError("need at least one server")
        if not 0 <= self.M <= self.K - 1:
            raise ParameterError(f"need 0 <= M <= K-1, got K={self.K}, M={self.M}")


@dataclass(frozen=True)
class RateReport:
    message_bits: int
    total_answer_bits: int
    per_server_bits: tuple[int, ...] = field(default=())

    @property
    def rate(self) -> Fraction:
        return Fraction(self.message_bits, self.total_answer_bits)


def check_km(K: int, M: int) -> None:
    if K < 1 or not 0 <= M < K:
        raise ParameterError(f"need 0 <= M < K, got K={K}, M={M}")


def sample_demand(K: int, M: int, rng=None) -> DemandSpec:
    """Draw (W, S): W uniform on [K], S uniform among M-subsets avoiding W."""
    check_km(K, M)
    rng = as_rng(rng)
    W = int(rng.integers(K))
    others = [j for j in range(K) if j != W]
    S = rng.choice(others, size=M, replace=False) if M else []
    return DemandSpec(W, frozenset(int(j) for j in S))


def joint_prior(W: int, S, K: int, M: int) -> Fraction:
    S = frozenset(S)
    if len(S) != M:
        raise ParameterError(f"|S| = {len(S)} but M = {M}")
    check_km(K, M)
    if W in S:
        return Fraction(0)
    return Fraction(1, (K - M) * comb(K, M))


def all_demands(K: int, M: int):
    """Every valid (W, S) pair, in a fixed order."""
    for W in range(K):
        others = [j for j in range(K) if j != W]
        for S in combinations(others, M):
            yield DemandSpec(W, frozenset(S))


def rate_of(t: int, answer_bit_lengths) -> RateReport:
    lengths = tuple(int(n) for n in answer_bit_lengths)
    if not lengths:
        raise ParameterError("no answers to measure")
    if any(n <= 0 for n in lengths):
        raise ParameterError("answer lengths must be positive")
    return RateReport(t, sum(lengths), lengths)
