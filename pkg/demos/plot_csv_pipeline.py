"""
From a CSV file to a subsample and its diagnostics
==================================================

Categorical columns are read as strings and coded by first appearance.
The same steps are available from the command line as
``balsub subsample`` and ``balsub inspect``.
"""

import csv
import tempfile
from pathlib import Path

import numpy as np

from balsub import SelectionConfig, balanced_select, diagnostics, ingest_csv, write_csv

rng = np.random.default_rng(0)
colours = ["red", "green", "blue", "grey"]
sizes = ["S", "M", "L"]

tmp = Path(tempfile.mkdtemp())
src = tmp / "items.csv"
with open(src, "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["colour", "size", "price"])
    for _ in range(5000):
        c = colours[min(3, int(rng.exponential(0.8)))]
        s = sizes[int(rng.integers(0, 3))]
        w.writerow([c, s, f"{rng.normal(10, 2):.2f}"])

data = ingest_csv(src, response="price")
print("levels:", dict(zip(data.names, data.labels)))

###############################################################################
# Select 24 rows and look at the result

sub = balanced_select(data, SelectionConfig(24, seed=1))
write_csv(data, tmp / "subsample.csv", sub.indices)
d = diagnostics(sub.rows, data.spec, candidates=data.levels)
print(f"f = {d['f']:.4f}, orthogonal array: {d['oa']}, det / n^Q = {d['det_ratio']:.4f}")
print((tmp / "subsample.csv").read_text().splitlines()[:5])
