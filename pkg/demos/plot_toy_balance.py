"""
Balanced subsample of a two-factor toy dataset
==============================================

A thousand points on two 5-level factors, with the levels crowded toward
the middle. Uniform sampling of 25 points misses level pairs; the greedy
balanced selector picks every pair once.
"""

import numpy as np

from balsub import LevelSpec, SelectionConfig, balanced_select, f_of, gen_toy, uniform_select

spec = LevelSpec((5, 5))
data = gen_toy(1000, spec, seed=25)

# level-pair counts in the full data
counts = np.zeros((5, 5), dtype=int)
np.add.at(counts, (data.levels[:, 0], data.levels[:, 1]), 1)
print("full data, level pair counts:")
print(counts)

###############################################################################
# Twenty-five points, two ways

cfg = SelectionConfig(25, seed=0)
for name, pick in [("uniform", uniform_select), ("balanced", balanced_select)]:
    sub = pick(data, cfg)
    table = np.zeros((5, 5), dtype=int)
    np.add.at(table, (sub.rows[:, 0], sub.rows[:, 1]), 1)
    print(f"\n{name}: f = {f_of(sub, spec):.4f}, empty cells = {(table == 0).sum()}")
    print(table)
