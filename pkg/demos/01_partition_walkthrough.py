"""Single-server retrieval when the user already holds a few messages.

Walks through one query of the partition scheme on eight messages with two
known ones, then asks the exact auditor what the server can infer.
"""

from pirsi import audit, partition
from pirsi.core import Database, DemandSpec

K, M = 8, 2
db = Database.random(K, 16, seed := 7)
spec = DemandSpec(1, frozenset({3, 5}))
print(f"database: K={K} messages of {db.t} bits (seed {seed})")
print(f"user wants message {spec.W} and already holds {sorted(spec.S)}\n")

# Fix the random choices so the split is easy to read.
fixed = partition.fill_partition(K, spec, label=2, side_pick=[5], rest_order=[0, 6, 7, 2, 3, 4])
print("parts:", [sorted(p) for p in fixed.parts])

msg, q, ans = partition.fetch_local(db, spec, rng=3)
print("\nan actual (shuffled) query:")
for part, s in zip(q.parts, ans.sums):
    print(f"  sum over {sorted(part)!s:<12} -> {s:04x}")
print(f"decoded {msg:04x}, stored {db[spec.W]:04x}")
print(f"downloaded {len(ans.sums)} sums of {db.t} bits, instead of {K} messages\n")

post = audit.posterior_given_query(partition.enumerate_queries, K, M, fixed.canonical())
print("server's posterior on the demand after seeing those parts:")
print("  " + "  ".join(f"{w}:{p}" for w, p in sorted(post.items())))
