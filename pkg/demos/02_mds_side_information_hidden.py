"""Hiding both the demand and which messages the user holds.

One fixed query asks for K-M parity symbols of a systematic MDS code.  Any
M known messages are enough to solve for the rest, so the query says nothing.
"""

from itertools import combinations

from pirsi import audit, mds
from pirsi.core import Database

K, M = 5, 2
db = Database.random(K, 8, 11)
code = mds.code_for(db, M)
print(f"K={K}, M={M}, field GF(2^{code.field.t})")
print("parity rows:")
for row in code.parity_matrix:
    print("  ", " ".join(f"{c:2d}" for c in row))

ans = mds.server_answer(db, mds.MdsQuery(M), code)
print(f"\nserver sends {len(ans.parities)} parities ({mds.answer_bits(code, db.t)} bits)\n")

for S in list(combinations(range(K), M))[:4]:
    got = mds.decode(ans, code, S, db.side_values(S), db.t)
    ok = all(got[j] == db[j] for j in got)
    print(f"holding {S}: recovered {sorted(got)} -> {'ok' if ok else 'WRONG'}")

rep = audit.audit_ws(mds.enumerate_queries, K, M)
print("\n" + rep.summary())
