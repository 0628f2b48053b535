# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: sliding-window maxima and the row-subset enumeration."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


cdef void _wmax(const double[:] src, double[:] dst, Py_ssize_t k, Py_ssize_t[:] dq) noexcept nogil:
    # dst[i] = max src[a] over a in [i-k+1, i] intersected with valid starts
    cdef Py_ssize_t m = src.shape[0]
    cdef Py_ssize_t n = m + k - 1
    cdef Py_ssize_t head = 0, tail = 0, i
    for i in range(n):
        if i < m:
            while tail > head and src[dq[tail - 1]] <= src[i]:
                tail -= 1
            dq[tail] = i
            tail += 1
        while dq[head] <= i - k:
            head += 1
        dst[i] = src[dq[head]]


def window_max_1d(avg, Py_ssize_t k):
    cdef const double[:] src = np.ascontiguousarray(avg, dtype=np.float64)
    cdef Py_ssize_t m = src.shape[0]
    out = np.empty(m + k - 1, dtype=np.float64)
    cdef double[:] dst = out
    cdef Py_ssize_t[:] dq = np.empty(m, dtype=np.intp)
    with nogil:
        _wmax(src, dst, k, dq)
    return out


def window_max_2d(avg, Py_ssize_t k):
    cdef const double[:, :] src = np.ascontiguousarray(avg, dtype=np.float64)
    cdef Py_ssize_t m0 = src.shape[0], m1 = src.shape[1]
    cdef Py_ssize_t n0 = m0 + k - 1, n1 = m1 + k - 1
    rows = np.empty((m0, n1), dtype=np.float64)
    out_t = np.empty((n1, n0), dtype=np.float64)
    cdef double[:, :] r = rows
    cdef double[:, :] o = out_t
    cols = np.empty((n1, m0), dtype=np.float64)
    cdef double[:, :] c = cols
    cdef Py_ssize_t[:] dq = np.empty(max(m0, m1), dtype=np.intp)
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(m0):
            _wmax(src[i, :], r[i, :], k, dq)
        for j in range(n1):
            for i in range(m0):
                c[j, i] = r[i, j]
        for j in range(n1):
            _wmax(c[j, :], o[j, :], k, dq)
    return np.ascontiguousarray(out_t.T)


cdef struct _Search:
    Py_ssize_t nr, nc, k_rows, k_cols
    double best_val


cdef void _leaf(_Search* st, double[:] col, double[:] buf, Py_ssize_t[:] comb,
                Py_ssize_t[:] best) noexcept nogil:
    cdef Py_ssize_t j, t, nc = st.nc
    cdef double x, v = 0.0
    for j in range(nc):
        x = col[j]
        t = j
        while t > 0 and buf[t - 1] > x:
            buf[t] = buf[t - 1]
            t -= 1
        buf[t] = x
    for t in range(nc - st.k_cols):
        v += buf[t]
    if v < st.best_val:
        st.best_val = v
        for j in range(st.k_rows):
            best[j] = comb[j]


cdef void _dfs(_Search* st, const double[:, :] W, double[:, :] partial, Py_ssize_t i,
               Py_ssize_t removed, double[:] buf, Py_ssize_t[:] comb, Py_ssize_t[:] best) noexcept nogil:
    # partial[i] holds the column sums of the kept rows among 0..i-1
    cdef Py_ssize_t j
    if i == st.nr:
        _leaf(st, partial[i], buf, comb, best)
        return
    if removed < st.k_rows:          # remove row i first: lexicographic order
        comb[removed] = i
        for j in range(st.nc):
            partial[i + 1, j] = partial[i, j]
        _dfs(st, W, partial, i + 1, removed + 1, buf, comb, best)
    if st.nr - i - 1 >= st.k_rows - removed:
        for j in range(st.nc):
            partial[i + 1, j] = partial[i, j] + W[i, j]
        _dfs(st, W, partial, i + 1, removed, buf, comb, best)


def min_complement_rows(w, Py_ssize_t k_rows, Py_ssize_t k_cols):
    """Best value and lexicographically first row subset; see the Python twin."""
    cdef const double[:, :] W = np.ascontiguousarray(w, dtype=np.float64)
    cdef _Search st
    st.nr = W.shape[0]
    st.nc = W.shape[1]
    st.k_rows = k_rows
    st.k_cols = k_cols
    st.best_val = INFINITY
    cdef double[:, :] partial = np.zeros((st.nr + 1, st.nc), dtype=np.float64)
    cdef double[:] buf = np.empty(max(st.nc, 1), dtype=np.float64)
    cdef Py_ssize_t[:] comb = np.zeros(max(k_rows, 1), dtype=np.intp)
    best_rows = np.arange(k_rows, dtype=np.intp)
    cdef Py_ssize_t[:] best = np.zeros(max(k_rows, 1), dtype=np.intp)
    with nogil:
        _dfs(&st, W, partial, 0, 0, buf, comb, best)
    best_rows[:] = np.asarray(best)[:k_rows]
    return st.best_val, best_rows
