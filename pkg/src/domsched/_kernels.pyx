# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def receiver_sweep(const double[:, :, ::1] tables, const double[:, ::1] tx_self,
                   const double[:, ::1] tx_int):
    cdef Py_ssize_t n = tables.shape[0], K = tables.shape[1]
    cdef Py_ssize_t i, a, b
    cdef double v, best
    out_self = np.empty((n, K))
    out_int = np.empty((n, K))
    cdef double[:, ::1] rs = out_self
    cdef double[:, ::1] ri = out_int
    with nogil:
        for i in range(n):
            for a in range(K):
                best = tables[i, a, 0] + tx_int[i, 0]
                for b in range(1, K):
                    v = tables[i, a, b] + tx_int[i, b]
                    if v > best:
                        best = v
                rs[i, a] = best
            for b in range(K):
                best = tables[i, 0, b] + tx_self[i, 0]
                for a in range(1, K):
                    v = tables[i, a, b] + tx_self[i, a]
                    if v > best:
                        best = v
                ri[i, b] = best
    return out_self, out_int


def exhaustive_search(const double[:, :, ::1] finite, const long long[:, :, ::1] dead,
                      const long long[::1] partner):
    cdef Py_ssize_t n = finite.shape[0], K = finite.shape[1]
    cdef Py_ssize_t i, d
    cdef long long cnt, best_cnt = -1, evaluated = 0
    cdef double fin, best_fin = 0.0
    x_arr = np.zeros(n, dtype=np.int64)
    best_arr = np.zeros(n, dtype=np.int64)
    cdef long long[::1] x = x_arr
    cdef long long[::1] best = best_arr
    if n == 0:
        return best_arr, 0, 0.0, 1
    with nogil:
        while True:
            fin = 0.0
            cnt = 0
            for i in range(n):
                fin = fin + finite[i, x[i], x[partner[i]]]
                cnt = cnt + dead[i, x[i], x[partner[i]]]
            evaluated += 1
            if best_cnt < 0 or cnt < best_cnt or (cnt == best_cnt and fin > best_fin):
                best_cnt = cnt
                best_fin = fin
                for i in range(n):
                    best[i] = x[i]
            # odometer, last link fastest
            d = n - 1
            while d >= 0:
                x[d] += 1
                if x[d] < K:
                    break
                x[d] = 0
                d -= 1
            if d < 0:
                break
    return best_arr, int(best_cnt), float(best_fin), int(evaluated)
