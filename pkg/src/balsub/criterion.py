"""Balance criterion for categorical subsamples.

``f(X_s)`` measures how far the one- and two-way level frequencies of a
subsample are from perfectly uniform. It is zero exactly when the subsample
is an orthogonal array of strength two. Two routes are provided: from level
counts (:func:`f_direct`) and from pairwise row coincidences
(:func:`f_pairwise`); they agree identically and each checks the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .dataset import DataError, Dataset, LevelSpec


@dataclass(frozen=True)
class Subsample:
    """Ordered selection of distinct row indices with the corresponding level rows."""

    indices: np.ndarray
    rows: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).ravel()
        rows = np.asarray(self.rows)
        if idx.size < 1:
            raise ValueError("a subsample needs at least one row")
        distinct = len(set(idx.tolist())) if idx.size <= 256 else np.unique(idx).size
        if distinct != idx.size:
            raise ValueError("subsample indices must be distinct")
        if rows.ndim != 2 or rows.shape[0] != idx.size:
            raise ValueError("rows must be an (n, p) matrix aligned with indices")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_dataset(cls, data: Dataset, indices) -> Subsample:
        idx = np.asarray(indices, dtype=np.int64).ravel()
        if idx.size and (idx.min() < 0 or idx.max() >= data.N):
            raise IndexError(f"subsample index out of range for N={data.N}")
        return cls(idx, np.ascontiguousarray(data.levels[idx]))

    @classmethod
    def of_rows(cls, rows) -> Subsample:
        """Wrap a bare level matrix; indices are ``0..n-1``."""
        rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
        return cls(np.arange(rows.shape[0]), rows)

    @property
    def n(self) -> int:
        return self.indices.size


@dataclass(frozen=True)
class BalanceStats:
    """One- and two-way level counts. ``pairwise[(j, k)]`` holds ``j < k`` only."""

    single: tuple[np.ndarray, ...]
    pairwise: dict[tuple[int, int], np.ndarray]
    n: int


def _rows(s) -> np.ndarray:
    return s.rows if isinstance(s, Subsample) else np.atleast_2d(np.asarray(s))


def balance_stats(s: Subsample, spec: LevelSpec) -> BalanceStats:
    rows = _rows(s).astype(np.int64, copy=False)
    n, p = rows.shape
    if p != spec.p:
        raise DataError(f"rows have {p} columns, spec has {spec.p}")
    if rows.min() < 0 or np.any(rows.max(axis=0) >= spec.array):
        raise DataError("level code out of range")
    single = tuple(np.bincount(rows[:, j], minlength=q) for j, q in enumerate(spec.q))
    pairwise = {}
    for j, k in combinations(range(p), 2):
        qj, qk = spec.q[j], spec.q[k]
        flat = np.bincount(rows[:, j] * qk + rows[:, k], minlength=qj * qk)
        pairwise[(j, k)] = flat.reshape(qj, qk)
    return BalanceStats(single, pairwise, n)


def imbalance_terms(stats: BalanceStats, spec: LevelSpec) -> dict:
    """Per-covariate and per-pair contributions to ``f^2``.

    Pair terms are reported once per unordered pair and already include
    the factor 2 from the ordered double sum.
    """
    n = stats.n
    single = []
    for q, counts in zip(spec.q, stats.single):
        single.append(float(np.sum((1.0 - q * counts / n) ** 2)))
    pairs = {}
    for (j, k), table in stats.pairwise.items():
        qq = spec.q[j] * spec.q[k]
        pairs[(j, k)] = 2.0 * float(np.sum((1.0 - qq * table / n) ** 2)) / qq
    return {"single": single, "pairwise": pairs}


def f_direct(stats: BalanceStats, spec: LevelSpec) -> float:
    """Balance criterion from level counts."""
    terms = imbalance_terms(stats, spec)
    total = sum(terms["single"]) + sum(terms["pairwise"].values())
    return float(np.sqrt(total))


def f_of(s, spec: LevelSpec) -> float:
    return f_direct(balance_stats(s, spec), spec)


def delta(row_a, row_b, spec: LevelSpec) -> int:
    """Coincidence similarity ``sum_j q_j * [row_a[j] == row_b[j]]``."""
    a = np.asarray(row_a).ravel()
    b = np.asarray(row_b).ravel()
    if a.size != spec.p or b.size != spec.p:
        raise ValueError(f"rows must have length p={spec.p}")
    return int(spec.array[a == b].sum())


def delta_to_all(row, levels, spec: LevelSpec) -> np.ndarray:
    """``delta(row, levels[i])`` for every row ``i``, as int64."""
    levels = np.asarray(levels)
    out = np.zeros(levels.shape[0], dtype=np.int64)
    for j, q in enumerate(spec.q):
        out += q * (levels[:, j] == row[j])
    return out


def pairwise_delta_sq_sum(s, spec: LevelSpec, block: int = 512) -> int:
    """Exact ``sum_{i<l} delta(x_i, x_l)^2`` as a Python int."""
    rows = _rows(s).astype(np.int64, copy=False)
    n = rows.shape[0]
    total = 0
    for start in range(0, n, block):
        stop = min(start + block, n)
        d = np.zeros((stop - start, n), dtype=np.int64)
        for j, q in enumerate(spec.q):
            d += q * (rows[start:stop, j, None] == rows[None, :, j])
        # keep only l > i
        mask = np.arange(n)[None, :] > np.arange(start, stop)[:, None]
        total += int(np.sum(d * d * mask, dtype=np.int64))
    return total


def f_squared_pairwise(s, spec: LevelSpec) -> Fraction:
    """``f^2 = 2 n^-2 sum_{i<l} delta^2 + C`` in exact rational arithmetic.

    ``C = n^-1 (sum q)^2 + p - sum q - p^2``. The factor 2 comes from
    splitting the full double sum over ``(i, l)`` into its diagonal and the
    two symmetric off-diagonal halves.
    """
    n = _rows(s).shape[0]
    if n < 1:
        raise ValueError("empty subsample")
    sq, p = spec.sum_q, spec.p
    S = pairwise_delta_sq_sum(s, spec)
    C = Fraction(sq * sq, n) + p - sq - p * p
    return Fraction(2 * S, n * n) + C


def f_pairwise(s, spec: LevelSpec) -> float:
    return float(np.sqrt(float(f_squared_pairwise(s, spec))))


def is_orthogonal_array(s, spec: LevelSpec) -> bool:
    """Strength-2 orthogonal array test by exact integer counts.

    Every level of every covariate must occur equally often, and for
    ``p >= 2`` every level pair in every column pair as well.
    """
    stats = balance_stats(s, spec)
    n = stats.n
    ok = all(n % q == 0 and np.all(c == n // q) for q, c in zip(spec.q, stats.single))
    for (j, k), table in stats.pairwise.items():
        qq = spec.q[j] * spec.q[k]
        ok = ok and n % qq == 0 and bool(np.all(table == n // qq))
    if __debug__ and n <= 10_000:
        assert ok == (f_direct(stats, spec) < 1e-12)
    return bool(ok)
