"""Server daemon, transports and the client-side fetch driver."""

from __future__ import annotations

import json
import logging
import os
import socket
import socketserver
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import mds, multiserver, partition, sun_jafar, wire
from .core import (
    Database,
    DemandSpec,
    ParameterError,
    PirError,
    ProblemParams,
    ProtocolError,
    RateReport,
    as_rng,
    rate_of,
)

log = logging.getLogger(__name__)

LISTEN_ENV = "PIRSI_LISTEN"
DEFAULT_LISTEN = "127.0.0.1:7700"
SCHEMES = ("partition", "mds", "multiserver")


class ConnectionFailure(PirError):
    """A server could not be reached or closed the connection."""


class ServerError(ProtocolError):
    """The server replied with an ERROR frame."""

    def __init__(self, code: int, message: str):
        super().__init__(f"server error {code}: {message}")
        self.code = code


def parse_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise ParameterError(f"address {addr!r} is not host:port")
    return host, int(port)


def default_listen() -> str:
    return os.environ.get(LISTEN_ENV, DEFAULT_LISTEN)


# -- server side ---------------------------------------------------------------


def handle_request(db: Database, msg_type: int, payload: bytes) -> tuple[int, bytes]:
    """Answer one request.  Depends only on the database and the request."""
    try:
        if msg_type == wire.HELLO:
            return wire.ANSWER, wire.encode_hello_reply(db.K, db.t)
        if msg_type == wire.PARTITION_QUERY:
            K, parts = wire.decode_partition_block(payload)
            if K != db.K:
                return wire.ERROR, wire.encode_error(wire.E_DB_MISMATCH, f"database has K={db.K}")
            ans = partition.server_answer(db, partition.PartitionQuery(K, parts))
            return wire.ANSWER, wire.encode_sums(ans.sums, db.t)
        if msg_type == wire.MDS_QUERY:
            M = wire.decode_mds_query(payload)
            if M >= db.K:
                return wire.ERROR, wire.encode_error(wire.E_DB_MISMATCH, f"M={M} is not below K={db.K}")
            code = mds.code_for(db, M)
            ans = mds.server_answer(db, mds.MdsQuery(M), code)
            return wire.ANSWER, wire.encode_parities(ans.parities, code.field.t)
        if msg_type == wire.SJ_QUERY:
            K, parts, atoms = wire.decode_sj_query(payload)
            if K != db.K:
                return wire.ERROR, wire.encode_error(wire.E_DB_MISMATCH, f"database has K={db.K}")
            return wire.ANSWER, wire.encode_bits(multiserver.server_answer(db, parts, atoms))
    except (ProtocolError, ParameterError) as exc:
        return wire.ERROR, wire.encode_error(wire.E_BAD_QUERY, str(exc))
    return wire.ERROR, wire.encode_error(wire.E_UNKNOWN_TYPE, f"unknown message type {msg_type:#04x}")


def respond_stream(db: Database, data: bytes) -> bytes:
    """Feed a byte stream of request frames; return the response stream."""
    out = []
    pos = 0
    while pos < len(data):
        try:
            msg_type, length = wire.parse_header(data[pos:pos + wire.HEADER.size])
        except wire.FrameError as exc:
            out.append(wire.encode_frame(wire.ERROR, wire.encode_error(wire.E_MALFORMED, str(exc))))
            break
        end = pos + wire.HEADER.size + length
        if end > len(data):
            out.append(wire.encode_frame(wire.ERROR, wire.encode_error(wire.E_MALFORMED, "truncated payload")))
            break
        out.append(wire.encode_frame(*handle_request(db, msg_type, data[pos + wire.HEADER.size:end])))
        pos = end
    return b"".join(out)


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionFailure("connection closed mid-frame" if buf else "connection closed")
        buf.extend(chunk)
    return bytes(buf)


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        db = self.server.db
        sock = self.request
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        while True:
            try:
                header = _recv_exact(sock, wire.HEADER.size)
            except ConnectionFailure:
                return
            try:
                msg_type, length = wire.parse_header(header)
            except wire.FrameError as exc:
                sock.sendall(wire.encode_frame(wire.ERROR, wire.encode_error(wire.E_MALFORMED, str(exc))))
                return
            try:
                payload = _recv_exact(sock, length)
            except ConnectionFailure:
                return
            sock.sendall(wire.encode_frame(*handle_request(db, msg_type, payload)))


class PirServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, db: Database, addr: tuple[str, int]):
        self.db = db
        super().__init__(addr, _Handler)

    @property
    def address(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"


def start_server(db: Database, listen: str = "127.0.0.1:0") -> PirServer:
    """Start a server on a background thread; call ``shutdown()`` to stop."""
    srv = PirServer(db, parse_addr(listen))
    threading.Thread(target=srv.serve_forever, kwargs={"poll_interval": 0.02}, daemon=True).start()
    return srv


def serve(db_path, listen_addr: str | None = None) -> None:
    db = Database.load(db_path)
    with PirServer(db, parse_addr(listen_addr or default_listen())) as srv:
        log.info("serving K=%d t=%d on %s", db.K, db.t, srv.address)
        srv.serve_forever()


# -- transports ----------------------------------------------------------------


class LoopbackTransport:
    """In-memory transport: frames go through the same bytes path as TCP."""

    def __init__(self, db: Database):
        self.db = db

    def exchange(self, frame: bytes) -> bytes:
        return respond_stream(self.db, frame)

    def close(self):
        pass


class TcpTransport:
    def __init__(self, addr: str, timeout: float = 10.0):
        self.addr = addr
        try:
            self.sock = socket.create_connection(parse_addr(addr), timeout=timeout)
        except OSError as exc:
            raise ConnectionFailure(f"cannot connect to {addr}: {exc}") from exc
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def exchange(self, frame: bytes) -> bytes:
        try:
            self.sock.sendall(frame)
            header = _recv_exact(self.sock, wire.HEADER.size)
            _, length = wire.parse_header(header)
            return header + _recv_exact(self.sock, length)
        except OSError as exc:
            raise ConnectionFailure(f"{self.addr}: {exc}") from exc

    def close(self):
        self.sock.close()


# -- transcripts ---------------------------------------------------------------


@dataclass
class Exchange:
    server: int
    request: bytes
    response: bytes


@dataclass
class Transcript:
    scheme: str
    K: int
    t: int
    M: int
    N: int
    exchanges: list[Exchange] = field(default_factory=list)

    def to_json(self) -> str:
        d = asdict(self)
        d["exchanges"] = [{"server": e.server, "request": e.request.hex(), "response": e.response.hex()}
                          for e in self.exchanges]
        return json.dumps(d, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> Transcript:
        d = json.loads(text)
        ex = [Exchange(e["server"], bytes.fromhex(e["request"]), bytes.fromhex(e["response"]))
              for e in d.pop("exchanges")]
        return cls(exchanges=ex, **d)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> Transcript:
        return cls.from_json(Path(path).read_text())

    def upload_bytes(self) -> int:
        return sum(len(e.request) for e in self.exchanges)


def answer_bits(transcript: Transcript) -> list[int]:
    """Information bits in each server's scheme answers; HELLO traffic excluded."""
    tr = transcript
    bits = [0] * tr.N
    for e in tr.exchanges:
        req_type, _ = wire.decode_frame(e.request)
        resp_type, payload = wire.decode_frame(e.response)
        if resp_type != wire.ANSWER or req_type == wire.HELLO:
            continue
        if req_type == wire.PARTITION_QUERY:
            bits[e.server] += len(wire.decode_sums(payload, tr.t)) * tr.t
        elif req_type == wire.MDS_QUERY:
            f = mds.choose_field(tr.K, tr.M, tr.t)
            c = mds.chunk_count(tr.t, f)
            bits[e.server] += len(wire.decode_parities(payload, f.t, c)) * c * f.t
        elif req_type == wire.SJ_QUERY:
            bits[e.server] += len(wire.decode_bits(payload))
    return bits


def rate_report(transcript: Transcript) -> RateReport:
    return rate_of(transcript.t, answer_bits(transcript))


# -- client --------------------------------------------------------------------


@dataclass
class SessionConfig:
    scheme: str
    K: int | None = None
    M: int = 0
    N: int = 1
    t: int | None = None
    servers: list[str] = field(default_factory=list)
    seed: int | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        if self.scheme != "multiserver" and self.N != 1:
            raise ParameterError(f"the {self.scheme} scheme uses a single server")
        if self.servers and len(self.servers) != self.N:
            raise ParameterError(f"{self.N} servers needed, {len(self.servers)} addresses given")

    @classmethod
    def from_text(cls, text: str) -> SessionConfig:
        raw = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ParameterError(f"config line {line!r} is not key=value")
            raw[key.strip().lower()] = value.strip()
        kw = {"scheme": raw.pop("scheme", "partition")}
        for key in ("k", "m", "n", "t", "seed"):
            if key in raw:
                kw[key if key == "seed" else key.upper()] = int(raw.pop(key))
        if "servers" in raw:
            kw["servers"] = [s.strip() for s in raw.pop("servers").split(",") if s.strip()]
        if raw:
            raise ParameterError(f"unknown config keys: {', '.join(sorted(raw))}")
        return cls(**kw)


@dataclass
class FetchResult:
    message: int
    rate: RateReport
    transcript: Transcript


def _check(resp: bytes) -> bytes:
    msg_type, payload = wire.decode_frame(resp)
    if msg_type == wire.ERROR:
        raise ServerError(*wire.decode_error(payload))
    if msg_type != wire.ANSWER:
        raise ProtocolError(f"unexpected reply type {msg_type:#04x}")
    return payload


def _fan_out(transports, frames) -> list[bytes]:
    if len(transports) == 1:
        return [transports[0].exchange(frames[0])]
    with ThreadPoolExecutor(max_workers=len(transports)) as pool:
        return list(pool.map(lambda tf: tf[0].exchange(tf[1]), zip(transports, frames)))


def fetch(cfg: SessionConfig, spec: DemandSpec, side_values, rng=None, transports=None) -> FetchResult:
    """Run one retrieval against live servers (or the given transports)."""
    rng = as_rng(cfg.seed if rng is None else rng)
    own = transports is None
    if own:
        transports = [TcpTransport(a) for a in cfg.servers]
    try:
        return _fetch(cfg, spec, side_values, rng, transports)
    finally:
        if own:
            for tr in transports:
                tr.close()


def _fetch(cfg, spec, side_values, rng, transports) -> FetchResult:
    N = len(transports)
    if N != cfg.N:
        raise ParameterError(f"{cfg.N} servers configured, {N} transports given")
    hello = wire.encode_frame(wire.HELLO)
    hello_replies = _fan_out(transports, [hello] * N)
    shapes = {wire.decode_hello_reply(_check(r)) for r in hello_replies}
    if len(shapes) != 1:
        raise ProtocolError("servers disagree on the database shape")
    K, t = shapes.pop()
    if cfg.K is not None and cfg.K != K:
        raise ParameterError(f"configured K={cfg.K} but the server has K={K}")
    if cfg.t is not None and cfg.t != t:
        raise ParameterError(f"configured t={cfg.t} but the server has t={t}")
    spec.check(K)
    M = spec.M
    if M != cfg.M:
        raise ParameterError(f"|S| = {M} but the session is configured for M = {cfg.M}")
    transcript = Transcript(cfg.scheme, K, t, M, N,
                            [Exchange(n, hello, r) for n, r in enumerate(hello_replies)])

    if cfg.scheme == "partition":
        q = partition.encode_query(partition.build_partition(spec, K, rng), rng)
        frames = [wire.encode_frame(wire.PARTITION_QUERY, wire.encode_partition_block(K, q.parts))]
        replies = _fan_out(transports, frames)
        ans = partition.PartitionAnswer(wire.decode_sums(_check(replies[0]), t), t)
        message = partition.decode(ans, q, spec, side_values)
    elif cfg.scheme == "mds":
        f = mds.choose_field(K, M, t)
        code = mds.make_code(K, M, f)
        frames = [wire.encode_frame(wire.MDS_QUERY, wire.encode_mds_query(M))]
        replies = _fan_out(transports, frames)
        parities = wire.decode_parities(_check(replies[0]), f.t, mds.chunk_count(t, f))
        message = mds.decode(mds.MdsAnswer(parities), code, spec.S, side_values, t)[spec.W]
    else:
        query, ctx = multiserver.build(spec, ProblemParams(N, K, M, t), rng)
        frames = [wire.encode_frame(wire.SJ_QUERY, wire.encode_sj_query(K, query.partition, query.server_atoms(n)))
                  for n in range(N)]
        replies = _fan_out(transports, frames)
        answers = [wire.decode_bits(_check(r)) for r in replies]
        message = multiserver.decode(answers, query, ctx, side_values)

    transcript.exchanges.extend(Exchange(n, fr, r) for n, (fr, r) in enumerate(zip(frames, replies)))
    return FetchResult(message, rate_report(transcript), transcript)


def fetch_loopback(db: Database, cfg: SessionConfig, spec: DemandSpec, rng=None) -> FetchResult:
    """In-process fetch: every server is a loopback view of ``db``."""
    return fetch(cfg, spec, db.side_values(spec.S), rng, [LoopbackTransport(db) for _ in range(cfg.N)])

