"""Two replicated servers, four messages, one known.

The user pairs the wanted message with the known one, XORs each pair into a
super-message, and runs the replicated-server protocol over the two
super-messages.  Six answer bits recover a four-bit message.
"""

from pirsi import multiserver, sun_jafar
from pirsi.bounds import multiserver_rate_lb
from pirsi.core import Database, DemandSpec

N, K, M = 2, 4, 1
db = Database.random(K, N ** (K // (M + 1)), 5)
spec = DemandSpec(0, frozenset({1}))

msg, query, answers = multiserver.fetch_local(db, spec, N, rng=2)
print("parts in sent order:", [sorted(p) for p in query.partition])
for n in range(N):
    atoms = query.server_atoms(n)
    print(f"server {n}: " + ", ".join("+".join(f"x{m}[{b}]" for m, b in a) for a in atoms))
    print(f"  answers {answers[n]}")
print(f"\ndecoded {msg:04b}, stored {db[spec.W]:04b}")
print(f"rate {db.t}/{sum(map(len, answers))} = {multiserver_rate_lb(N, K, M)}")

print("\nsame setup without side information:")
total, rate = sun_jafar.download_cost(N, K)
print(f"  {total} bits for a {N ** K}-bit message, rate {rate}")
