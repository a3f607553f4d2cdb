"""Subsample selection: sequential balanced greedy and uniform random baseline."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Callable, Literal, TextIO

import numpy as np

from . import _kernels
from .criterion import Subsample, delta_to_all
from .dataset import Dataset

TieRule = Literal["lowest-index", "seeded-random"]


@dataclass(frozen=True)
class SelectionConfig:
    n: int
    seed: int = 0
    tie_rule: TieRule = "lowest-index"
    parallel: bool = False
    backend: Literal["numba", "numpy"] = "numba"

    def check(self, data: Dataset):
        if data.N < 1:
            raise ValueError("empty dataset")
        if not 1 <= self.n <= data.N:
            raise ValueError(f"subsample size n={self.n} must be in [1, N={data.N}]")
        if self.tie_rule not in ("lowest-index", "seeded-random"):
            raise ValueError(f"unknown tie rule {self.tie_rule!r}")
        if self.backend not in ("numba", "numpy"):
            raise ValueError(f"unknown backend {self.backend!r}")


@dataclass
class DeltaTable:
    """Greedy scores ``sum_t delta(x_t, x_i)^2``; entries of selected rows are stale."""

    scores: np.ndarray
    selected_mask: np.ndarray

    def free_scores(self) -> np.ndarray:
        return self.scores[~self.selected_mask]


def rescore(data: Dataset, partial) -> DeltaTable:
    """Recompute the greedy scores of a partial selection from scratch."""
    if isinstance(partial, Subsample):
        idx = partial.indices
    else:
        idx = np.asarray(partial, dtype=np.int64).ravel()
    scores = np.zeros(data.N, dtype=np.int64)
    for i in idx:
        d = delta_to_all(data.levels[i], data.levels, data.spec)
        scores += d * d
    mask = np.zeros(data.N, dtype=bool)
    mask[idx] = True
    return DeltaTable(scores, mask)


def _check_overflow(data: Dataset, n: int):
    if n * data.spec.sum_q ** 2 >= np.iinfo(np.int64).max:
        raise OverflowError("greedy scores could exceed int64 for this n and level count")


def balanced_select(
    data: Dataset,
    config: SelectionConfig,
    callback: Callable[[int, DeltaTable], None] | None = None,
    trace: TextIO | None = None,
    trace_f: bool = False,
) -> Subsample:
    """Greedily pick ``config.n`` rows that keep level coincidences low.

    The first row is drawn at random from ``config.seed``. Every later row
    minimizes ``Delta(x) = sum_t delta(x_t, x)^2`` over the unselected rows,
    and after each pick only ``delta(new, x)^2`` is added to the stored
    scores, so a step costs one O(p) comparison per row.

    ``callback(m, table)`` runs once ``m`` rows are selected and the table
    holds their scores. ``trace`` receives one JSON object per pick; with
    ``trace_f`` it also carries the running balance criterion.
    """
    config.check(data)
    _check_overflow(data, config.n)
    N, n = data.N, config.n
    levels = data.levels
    q = data.spec.array
    rng = np.random.default_rng(config.seed)

    if config.backend == "numpy":
        scan = _kernels.scan_numpy
    elif config.parallel:
        n_chunks = max(1, min(N // 4096, 8 * (os.cpu_count() or 1)))

        def scan(lv, qq, row, sc, sel, buf):
            return _kernels.scan_parallel(lv, qq, row, sc, sel, buf, n_chunks)
    else:
        scan = _kernels.scan_sequential

    scores = np.zeros(N, dtype=np.int64)
    selected = np.zeros(N, dtype=bool)
    chosen = np.empty(n, dtype=np.int64)
    buf = np.empty(N, dtype=np.int32)
    table = DeltaTable(scores, selected)

    # exact running sum_{i<l} delta^2 for the optional trace
    sq, p = data.spec.sum_q, data.spec.p
    pair_sum = 0

    current = int(rng.integers(N))
    current_score = 0
    for m in range(1, n + 1):
        chosen[m - 1] = current
        selected[current] = True
        pair_sum += current_score
        if trace is not None:
            rec = {"iteration": m, "index": current, "delta": current_score}
            if trace_f:
                f2 = 2 * pair_sum / m**2 + sq * sq / m + p - sq - p * p
                rec["f"] = float(np.sqrt(max(f2, 0.0)))
            trace.write(json.dumps(rec) + "\n")
        if m == n and callback is None:
            break
        best, best_i = scan(levels, q, levels[current], scores, selected, buf)
        if callback is not None:
            callback(m, table)
        if m == n:
            break
        if config.tie_rule == "seeded-random":
            ties = np.flatnonzero((scores == best) & ~selected)
            best_i = int(ties[rng.integers(ties.size)])
        current, current_score = int(best_i), int(best)

    return Subsample.from_dataset(data, chosen)


def uniform_select(data: Dataset, config: SelectionConfig) -> Subsample:
    """Simple random sampling without replacement."""
    config.check(data)
    rng = np.random.default_rng(config.seed)
    return Subsample.from_dataset(data, rng.choice(data.N, size=config.n, replace=False))


METHODS = {"balanced": balanced_select, "uniform": uniform_select}


def select(method: str, data: Dataset, config: SelectionConfig) -> Subsample:
    try:
        fn = METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; expected one of {sorted(METHODS)}") from None
    return fn(data, config)
