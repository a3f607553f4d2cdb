"""
Information diagnostics of a subsample
======================================

For a nonsingular subsample of size n, the orthonormally coded
information matrix has determinant at most n^Q, and the worst-case
leverage over all level combinations is at least Q/n. Both bounds are
attained by an orthogonal array.
"""

import numpy as np

from balsub import LevelSpec, diagnostics

spec = LevelSpec((3, 3, 3))

# nine runs, three 3-level factors, every level pair once
oa = np.array([[0, 0, 0], [0, 1, 1], [0, 2, 2],
               [1, 0, 1], [1, 1, 2], [1, 2, 0],
               [2, 0, 2], [2, 1, 0], [2, 2, 1]])

rng = np.random.default_rng(3)
rand = np.stack([rng.integers(0, 3, size=12) for _ in range(3)], axis=1)

for name, rows in [("orthogonal array", oa), ("random 12 rows", rand)]:
    d = diagnostics(rows, spec)
    print(f"{name}: n={d['n']} f={d['f']:.3f} oa={d['oa']} singular={d['singular']}")
    if not d["singular"]:
        print(f"  det / n^Q        = {d['det_ratio']:.4f}")
        print(f"  max leverage n/Q = {d['leverage_ratio']:.4f}")

###############################################################################
# Dropping one level makes the design singular

d = diagnostics(oa[:6], spec)
print(f"\nfirst six runs (level 2 of factor 0 missing): singular={d['singular']}")
