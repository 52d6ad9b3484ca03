"""Retrieval over TCP against real server threads, with a saved transcript."""

import tempfile
from pathlib import Path

from pirsi import net
from pirsi.core import Database, DemandSpec

db = Database.random(6, 8, 1)
servers = [net.start_server(db) for _ in range(2)]
try:
    cfg = net.SessionConfig("multiserver", K=6, M=1, N=2, servers=[s.address for s in servers], seed=4)
    spec = DemandSpec(4, frozenset({0}))
    res = net.fetch(cfg, spec, db.side_values(spec.S))
finally:
    for s in servers:
        s.shutdown()
        s.server_close()

print(f"fetched message {spec.W}: {res.message:02x} (stored {db[spec.W]:02x})")
print(f"per-server bits {res.rate.per_server_bits}, rate {res.rate.rate}")

path = Path(tempfile.mkdtemp()) / "session.json"
res.transcript.save(path)
again = net.rate_report(net.Transcript.load(path))
print(f"transcript {path.name}: {len(res.transcript.exchanges)} exchanges, rate from file {again.rate}")

local = net.fetch_loopback(db, net.SessionConfig("multiserver", K=6, M=1, N=2, seed=4), spec)
print("in-process run produced the same bytes:", local.transcript.to_json() == res.transcript.to_json())
