# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: similarity construction, row softmax, greedy selection.

Mirrors the pure-NumPy backend's semantics: float64 accumulation,
lowest-index tie-breaking, identical eager/lazy gain arithmetic.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, INFINITY

cnp.import_array()

NAME = "fast"


DEF TILE_I = 64
DEF TILE_J = 512


def pairwise_inner(const float[:, ::1] a, const float[:, ::1] b):
    """Row-by-row inner products, accumulated left-to-right in float64.

    Tiled so the innermost loop runs over contiguous columns and
    vectorizes; each output entry still accumulates over the embedding
    axis strictly in order, so results are bit-identical to the naive
    triple loop.
    """
    cdef Py_ssize_t ma = a.shape[0], mb = b.shape[0], d = a.shape[1]
    if b.shape[1] != d:
        raise ValueError("dimension mismatch")
    a64 = np.ascontiguousarray(np.asarray(a), dtype=np.float64)
    bt = np.ascontiguousarray(np.asarray(b).T, dtype=np.float64)
    cdef const double[:, ::1] A = a64
    cdef const double[:, ::1] BT = bt  # (d, mb)
    out = np.zeros((ma, mb), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i0, j0, i1, j1, i, j, t
    cdef double av
    for i0 in range(0, ma, TILE_I):
        i1 = min(i0 + TILE_I, ma)
        for j0 in range(0, mb, TILE_J):
            j1 = min(j0 + TILE_J, mb)
            for t in range(d):
                for i in range(i0, i1):
                    av = A[i, t]
                    for j in range(j0, j1):
                        o[i, j] += av * BT[t, j]
    return out


def softmax_rows(const double[:, ::1] m, double tau):
    """Row-wise softmax at temperature ``tau``, stabilized by the row max."""
    cdef Py_ssize_t rows = m.shape[0], cols = m.shape[1]
    out = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    cdef double mx, s
    for i in range(rows):
        mx = -INFINITY
        for j in range(cols):
            if m[i, j] > mx:
                mx = m[i, j]
        s = 0.0
        for j in range(cols):
            o[i, j] = exp((m[i, j] - mx) / tau)
            s += o[i, j]
        for j in range(cols):
            o[i, j] /= s
    return out


cdef double _marginal(const double[:, ::1] m1, double w1,
                      const double[:, ::1] m2, double w2, bint has2,
                      double[::1] best1, double[::1] best2,
                      Py_ssize_t j, double cur) noexcept nogil:
    cdef double tot = 0.0, acc, v
    cdef Py_ssize_t i, mt
    mt = m1.shape[0]
    if mt > 0:
        acc = 0.0
        for i in range(mt):
            v = m1[i, j]
            if best1[i] > v:
                v = best1[i]
            acc += v
        tot += w1 * (acc / mt)
    if has2:
        mt = m2.shape[0]
        if mt > 0:
            acc = 0.0
            for i in range(mt):
                v = m2[i, j]
                if best2[i] > v:
                    v = best2[i]
                acc += v
            tot += w2 * (acc / mt)
    return tot - cur


def greedy(const double[:, ::1] m1, double w1, m2_obj, double w2,
           Py_ssize_t k, bint lazy):
    """Greedy (or lazy-greedy) maximization of the weighted coverage sum."""
    cdef bint has2 = m2_obj is not None
    cdef const double[:, ::1] m2
    if has2:
        m2 = m2_obj
        if m2.shape[1] != m1.shape[1]:
            raise ValueError("matrices must share their source count")
    else:
        m2 = np.empty((0, m1.shape[1]), dtype=np.float64)

    cdef Py_ssize_t n = m1.shape[1]
    cdef Py_ssize_t kk = k if k < n else n
    cdef double[::1] best1 = np.full(m1.shape[0], -INFINITY)
    cdef double[::1] best2 = np.full(m2.shape[0], -INFINITY)
    taken_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] taken = taken_arr
    sel_arr = np.empty(kk, dtype=np.int64)
    gains_arr = np.empty(kk, dtype=np.float64)
    cdef cnp.int64_t[::1] selected = sel_arr
    cdef double[::1] gains = gains_arr
    cdef double cur = 0.0, g, best_g, mx
    cdef Py_ssize_t step, j, best_j, i
    cdef long long evals = 0

    cdef double[::1] ub
    cdef cnp.uint8_t[::1] fresh
    if lazy:
        ub = np.full(n, INFINITY)
        fresh_arr = np.zeros(n, dtype=np.uint8)
        fresh = fresh_arr

    for step in range(kk):
        if lazy:
            for j in range(n):
                fresh[j] = 0
            while True:
                mx = -INFINITY
                best_j = -1
                for j in range(n):
                    if taken[j]:
                        continue
                    if ub[j] > mx:
                        mx = ub[j]
                        best_j = j
                if fresh[best_j]:
                    break
                ub[best_j] = _marginal(m1, w1, m2, w2, has2,
                                       best1, best2, best_j, cur)
                fresh[best_j] = 1
                evals += 1
            best_g = ub[best_j]
        else:
            best_g = -INFINITY
            best_j = -1
            for j in range(n):
                if taken[j]:
                    continue
                g = _marginal(m1, w1, m2, w2, has2, best1, best2, j, cur)
                evals += 1
                if g > best_g:
                    best_g = g
                    best_j = j
        selected[step] = best_j
        gains[step] = best_g
        cur += best_g
        taken[best_j] = 1
        for i in range(m1.shape[0]):
            if m1[i, best_j] > best1[i]:
                best1[i] = m1[i, best_j]
        if has2:
            for i in range(m2.shape[0]):
                if m2[i, best_j] > best2[i]:
                    best2[i] = m2[i, best_j]

    cdef double v1 = 0.0, v2 = 0.0, acc
    if kk > 0 and m1.shape[0] > 0:
        acc = 0.0
        for i in range(m1.shape[0]):
            acc += best1[i]
        v1 = acc / m1.shape[0]
    if has2 and kk > 0 and m2.shape[0] > 0:
        acc = 0.0
        for i in range(m2.shape[0]):
            acc += best2[i]
        v2 = acc / m2.shape[0]
    return sel_arr, gains_arr, v1, v2, evals
