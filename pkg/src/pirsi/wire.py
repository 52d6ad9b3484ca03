"""Binary encodings of frames, queries and answers.

All integers are big-endian.  A frame is ``b"PS" | version | type | u32 len |
payload``.
"""

from __future__ import annotations

import struct

from .core import ProtocolError, pack_bits, unpack_bits

MAGIC = b"PS"
VERSION = 0x01
HEADER = struct.Struct(">2sBBI")

HELLO = 0x01
PARTITION_QUERY = 0x02
MDS_QUERY = 0x03
SJ_QUERY = 0x04
ANSWER = 0x81
ERROR = 0xFF

MSG_NAMES = {HELLO: "HELLO", PARTITION_QUERY: "PARTITION_QUERY", MDS_QUERY: "MDS_QUERY",
             SJ_QUERY: "SJ_QUERY", ANSWER: "ANSWER", ERROR: "ERROR"}

# error codes carried in ERROR frames
E_MALFORMED = 1
E_UNKNOWN_TYPE = 2
E_DB_MISMATCH = 3
E_BAD_QUERY = 4

MAX_PAYLOAD = 1 << 26


class FrameError(ProtocolError):
    """Frame header is unusable; the stream cannot be resynchronized."""


def encode_frame(msg_type: int, payload: bytes = b"") -> bytes:
    return HEADER.pack(MAGIC, VERSION, msg_type, len(payload)) + payload


def parse_header(header: bytes) -> tuple[int, int]:
    if len(header) != HEADER.size:
        raise FrameError("truncated frame header")
    magic, version, msg_type, length = HEADER.unpack(header)
    if magic != MAGIC:
        raise FrameError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FrameError(f"unsupported version {version}")
    if length > MAX_PAYLOAD:
        raise FrameError(f"payload of {length} bytes is too large")
    return msg_type, length


def decode_frame(data: bytes) -> tuple[int, bytes]:
    """Decode exactly one frame."""
    msg_type, length = parse_header(data[:HEADER.size])
    payload = data[HEADER.size:]
    if len(payload) != length:
        raise FrameError(f"declared {length} payload bytes, found {len(payload)}")
    return msg_type, payload


def split_frames(data: bytes) -> list[tuple[int, bytes]]:
    frames = []
    pos = 0
    while pos < len(data):
        msg_type, length = parse_header(data[pos:pos + HEADER.size])
        end = pos + HEADER.size + length
        if end > len(data):
            raise FrameError("truncated frame payload")
        frames.append((msg_type, data[pos + HEADER.size:end]))
        pos = end
    return frames


class Reader:
    """Cursor over a payload that raises ProtocolError on underrun."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ProtocolError("payload too short")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        s = struct.Struct(">" + fmt)
        return s.unpack(self.take(s.size))

    def done(self) -> None:
        if self.pos != len(self.data):
            raise ProtocolError(f"{len(self.data) - self.pos} trailing payload bytes")


# -- HELLO / ERROR -------------------------------------------------------------


def encode_hello_reply(K: int, t: int) -> bytes:
    return struct.pack(">HI", K, t)


def decode_hello_reply(payload: bytes) -> tuple[int, int]:
    r = Reader(payload)
    K, t = r.unpack("HI")
    r.done()
    return K, t


def encode_error(code: int, message: str) -> bytes:
    return struct.pack(">H", code) + message.encode("utf-8")


def decode_error(payload: bytes) -> tuple[int, str]:
    (code,) = struct.unpack(">H", payload[:2])
    return code, payload[2:].decode("utf-8", "replace")


# -- partitions ----------------------------------------------------------------


def encode_bitmap(K: int, part) -> bytes:
    """Index 0 is the most significant bit of the first byte."""
    value = 0
    for j in part:
        value |= 1 << (K - 1 - j)
    return pack_bits(value, K)


def decode_bitmap(data: bytes, K: int) -> frozenset[int]:
    try:
        value = unpack_bits(data, K)
    except ValueError as exc:
        raise ProtocolError(str(exc)) from None
    return frozenset(j for j in range(K) if (value >> (K - 1 - j)) & 1)


def encode_partition_block(K: int, parts) -> bytes:
    out = [struct.pack(">HH", K, len(parts))]
    out.extend(encode_bitmap(K, p) for p in parts)
    return b"".join(out)


def read_partition_block(r: Reader) -> tuple[int, tuple[frozenset[int], ...]]:
    K, g = r.unpack("HH")
    nb = (K + 7) // 8
    return K, tuple(decode_bitmap(r.take(nb), K) for _ in range(g))


def decode_partition_block(payload: bytes):
    r = Reader(payload)
    out = read_partition_block(r)
    r.done()
    return out


def encode_sums(sums, t: int) -> bytes:
    return struct.pack(">I", len(sums)) + b"".join(pack_bits(s, t) for s in sums)


def decode_sums(payload: bytes, t: int) -> tuple[int, ...]:
    r = Reader(payload)
    (count,) = r.unpack("I")
    nb = (t + 7) // 8
    try:
        sums = tuple(unpack_bits(r.take(nb), t) for _ in range(count))
    except ValueError as exc:
        raise ProtocolError(str(exc)) from None
    r.done()
    return sums


# -- MDS -----------------------------------------------------------------------


def encode_mds_query(M: int) -> bytes:
    return struct.pack(">H", M)


def decode_mds_query(payload: bytes) -> int:
    r = Reader(payload)
    (M,) = r.unpack("H")
    r.done()
    return M


def encode_parities(parities, field_t: int) -> bytes:
    nb = (field_t + 7) // 8
    out = [struct.pack(">H", len(parities))]
    for vec in parities:
        out.extend(e.to_bytes(nb, "big") for e in vec)
    return b"".join(out)


def decode_parities(payload: bytes, field_t: int, chunks: int) -> tuple[tuple[int, ...], ...]:
    r = Reader(payload)
    (count,) = r.unpack("H")
    nb = (field_t + 7) // 8
    out = []
    for _ in range(count):
        vec = tuple(int.from_bytes(r.take(nb), "big") for _ in range(chunks))
        if any(e >> field_t for e in vec):
            raise ProtocolError("field element wider than the field")
        out.append(vec)
    r.done()
    return tuple(out)


# -- Sun-Jafar -----------------------------------------------------------------


def encode_atoms(atoms) -> bytes:
    out = [struct.pack(">I", len(atoms))]
    for atom in atoms:
        out.append(struct.pack(">B", len(atom)))
        out.extend(struct.pack(">HI", m, s) for m, s in atom)
    return b"".join(out)


def read_atoms(r: Reader) -> list[tuple[tuple[int, int], ...]]:
    (count,) = r.unpack("I")
    atoms = []
    for _ in range(count):
        (n,) = r.unpack("B")
        if n == 0:
            raise ProtocolError("empty atom")
        atoms.append(tuple(r.unpack("HI") for _ in range(n)))
    return atoms


def decode_atoms(payload: bytes):
    r = Reader(payload)
    out = read_atoms(r)
    r.done()
    return out


def encode_sj_query(K: int, parts, atoms) -> bytes:
    return encode_partition_block(K, parts) + encode_atoms(atoms)


def decode_sj_query(payload: bytes):
    r = Reader(payload)
    K, parts = read_partition_block(r)
    atoms = read_atoms(r)
    r.done()
    return K, parts, atoms


def encode_bits(bits) -> bytes:
    value = 0
    for b in bits:
        value = (value << 1) | (b & 1)
    return struct.pack(">I", len(bits)) + pack_bits(value, len(bits))


def decode_bits(payload: bytes) -> list[int]:
    r = Reader(payload)
    (count,) = r.unpack("I")
    try:
        value = unpack_bits(r.take((count + 7) // 8), count)
    except ValueError as exc:
        raise ProtocolError(str(exc)) from None
    r.done()
    return [(value >> (count - 1 - i)) & 1 for i in range(count)]
