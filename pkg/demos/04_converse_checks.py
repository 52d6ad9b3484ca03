"""Lower-bound side: acyclic sets and small index codes."""

import numpy as np

from pirsi import bounds
from pirsi.gf_field import default_field

g = bounds.SideInfoGraph(8, tuple(frozenset({(i + 1) % 8, (i + 2) % 8}) for i in range(8)))
print(g.to_text())
Z = bounds.mais_greedy(g, mode="lowest")
print("greedy acyclic set:", Z, "acyclic:", bounds.induces_acyclic(g, Z))

rng = np.random.default_rng(0)
worst = min(len(bounds.mais_greedy(bounds.SideInfoGraph.random_regular(12, 3, rng), rng)) for _ in range(500))
print(f"smallest set over 500 random 3-out graphs on 12 vertices: {worst} (bound {-(-12 // 4)})")

print("\nhow many coded rows must a server send so that every (demand, side set) works?")
f = default_field(2)
for K, M in [(3, 1), (4, 1), (4, 2)]:
    need = next(r for r in range(1, K + 1) if bounds.exists_code_with_rows(K, M, r, f))
    print(f"  K={K} M={M}: {need} rows over GF(4)  (formula {bounds.lemma5_lower_bound(K, M)})")
