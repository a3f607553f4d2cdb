"""Fused score-update / argmin scans used by the greedy selector.

Each pass adds ``delta(new_row, x_i)^2`` to the score of every unselected
row ``i`` and returns the unselected row with the smallest score, lowest
index first on ties. The parallel variant reduces per-chunk minima in chunk
order, so it returns exactly what the sequential scan returns.

``delta`` is accumulated one covariate column at a time into an int32
buffer; this keeps the inner loop a contiguous, vectorizable compare-add.
"""

import numba as nb
import numpy as np

INT64_MAX = np.iinfo(np.int64).max

# prefer OpenMP / workqueue; probing an outdated TBB only produces warnings
nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


@nb.njit(cache=True, nogil=True)
def _scan_range(levels, q, new_row, scores, selected, buf, lo, hi):
    p = levels.shape[1]
    for i in range(lo, hi):
        buf[i] = 0
    for j in range(p):
        v = new_row[j]
        qj = np.int32(q[j])
        for i in range(lo, hi):
            if levels[i, j] == v:
                buf[i] += qj
    best = INT64_MAX
    best_i = -1
    for i in range(lo, hi):
        if selected[i]:
            continue
        d = np.int64(buf[i])
        s = scores[i] + d * d
        scores[i] = s
        if s < best:
            best = s
            best_i = i
    return best, best_i


@nb.njit(cache=True, nogil=True)
def scan_sequential(levels, q, new_row, scores, selected, buf):
    return _scan_range(levels, q, new_row, scores, selected, buf, 0, levels.shape[0])


@nb.njit(cache=True, nogil=True, parallel=True)
def scan_parallel(levels, q, new_row, scores, selected, buf, n_chunks):
    N = levels.shape[0]
    size = (N + n_chunks - 1) // n_chunks
    mins = np.empty(n_chunks, dtype=np.int64)
    args = np.empty(n_chunks, dtype=np.int64)
    for c in nb.prange(n_chunks):
        lo = c * size
        hi = min(N, lo + size)
        b, bi = _scan_range(levels, q, new_row, scores, selected, buf, lo, hi)
        mins[c] = b
        args[c] = bi
    best = INT64_MAX
    best_i = -1
    for c in range(n_chunks):
        # chunks are index-ordered, so strict < keeps the lowest index on ties
        if args[c] >= 0 and mins[c] < best:
            best = mins[c]
            best_i = args[c]
    return best, best_i


def scan_numpy(levels, q, new_row, scores, selected, buf):
    d = np.zeros(levels.shape[0], dtype=np.int64)
    for j in range(levels.shape[1]):
        d += q[j] * (levels[:, j] == new_row[j])
    free = ~selected
    scores[free] += d[free] * d[free]
    masked = np.where(selected, INT64_MAX, scores)
    i = int(np.argmin(masked))
    if selected[i]:
        return INT64_MAX, -1
    return int(masked[i]), i
