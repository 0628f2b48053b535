"""Pure-Python/numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` exactly and are used when the compiled module
is unavailable or ``VARLP_PURE_PYTHON=1`` is set.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np
from scipy.ndimage import maximum_filter, maximum_filter1d


def window_max_1d(avg: np.ndarray, k: int) -> np.ndarray:
    """For each cell ``i`` of an ``n``-cell line, the max of ``avg[a]`` over
    window starts ``a`` with ``a <= i <= a + k - 1``.  ``avg`` has length
    ``n - k + 1`` (one entry per admissible window start).
    """
    if k == 1:
        return np.array(avg, dtype=float)
    padded = np.concatenate([avg, np.full(k - 1, -np.inf)])
    # window of width k ending at i
    return maximum_filter1d(padded, size=k, origin=(k - 1) // 2, mode="constant", cval=-np.inf)


def window_max_2d(avg: np.ndarray, k: int) -> np.ndarray:
    """Two-dimensional analogue of :func:`window_max_1d` on square windows."""
    if k == 1:
        return np.array(avg, dtype=float)
    padded = np.pad(avg, ((0, k - 1), (0, k - 1)), constant_values=-np.inf)
    o = (k - 1) // 2
    return maximum_filter(padded, size=k, origin=(o, o), mode="constant", cval=-np.inf)


def min_complement_sum(w: np.ndarray, k_rows: int, k_cols: int) -> tuple:
    """``min`` over row subsets ``R`` (``|R| = k_rows``) and column subsets ``S``
    (``|S| = k_cols``) of ``sum_{i not in R, j not in S} w[i, j]``.

    For a fixed ``R`` the optimal ``S`` drops the ``k_cols`` largest column
    sums, so only the rows are enumerated.  Returns ``(value, rows, cols)``
    with the lexicographically first minimizer.
    """
    w = np.ascontiguousarray(w, dtype=float)
    nr, nc = w.shape
    keep = nc - k_cols
    combos = np.array(list(combinations(range(nr), k_rows)), dtype=np.int64)
    combos = combos.reshape(max(combos.shape[0], 1), k_rows)
    best_val, best_rows, best_cols = np.inf, None, None
    chunk = 4096
    for start in range(0, combos.shape[0], chunk):
        block = combos[start:start + chunk]
        outside = np.ones((block.shape[0], nr))
        np.put_along_axis(outside, block, 0.0, axis=1)
        colsums = outside @ w
        order = np.argsort(colsums, axis=1, kind="stable")
        kept = np.take_along_axis(colsums, order[:, :keep], axis=1)
        vals = kept.sum(axis=1)
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val = float(vals[j])
            best_rows = block[j].copy()
            best_cols = np.sort(order[j, keep:])
    return best_val, best_rows, best_cols
