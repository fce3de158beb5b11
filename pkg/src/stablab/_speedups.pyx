# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; mirrors stablab._pykernels function for function."""

import numpy as np

cimport cython
cimport numpy as cnp
from libc.math cimport sqrt

BACKEND = "cython"


def perm_compose(const cnp.int64_t[::1] a, const cnp.int64_t[::1] b):
    cdef Py_ssize_t n = a.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = a[b[i]]
    return out_arr


def perm_invert(const cnp.int64_t[::1] a):
    cdef Py_ssize_t n = a.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t i
    for i in range(n):
        out[a[i]] = i
    return out_arr


def hamming_count(const cnp.int64_t[::1] a, const cnp.int64_t[::1] b):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, count = 0
    for i in range(n):
        if a[i] != b[i]:
            count += 1
    return count


def eval_word_perm(
    const cnp.int64_t[::1] letters,
    const cnp.int64_t[:, ::1] gens,
    const cnp.int64_t[:, ::1] gens_inv,
):
    cdef Py_ssize_t n = gens.shape[1]
    cdef Py_ssize_t m = letters.shape[0]
    acc_arr = np.arange(n, dtype=np.int64)
    tmp_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] acc = acc_arr
    cdef cnp.int64_t[::1] tmp = tmp_arr
    cdef const cnp.int64_t[::1] row
    cdef cnp.int64_t x
    cdef Py_ssize_t i, j
    for i in range(m):
        x = letters[i]
        if x > 0:
            row = gens[x - 1]
        else:
            row = gens_inv[-x - 1]
        for j in range(n):
            tmp[j] = acc[row[j]]
        acc, tmp = tmp, acc
        acc_arr, tmp_arr = tmp_arr, acc_arr
    return acc_arr


def homdist_scan(const cnp.int64_t[:, :, ::1] homs, const cnp.int64_t[:, ::1] phi):
    cdef Py_ssize_t m = homs.shape[0]
    cdef Py_ssize_t k = homs.shape[1]
    cdef Py_ssize_t n = homs.shape[2]
    cdef Py_ssize_t best = n + 1
    cdef Py_ssize_t best_idx = 0
    cdef Py_ssize_t row, g, j, count, cur_max
    for row in range(m):
        cur_max = 0
        for g in range(k):
            count = 0
            for j in range(n):
                if homs[row, g, j] != phi[g, j]:
                    count += 1
            if count > cur_max:
                cur_max = count
            if cur_max >= best:
                break
        if cur_max < best:
            best = cur_max
            best_idx = row
            if best == 0:
                break
    return best_idx, best


def jacobi_eigvalsh(const double complex[:, :] h, double tol, int max_sweeps):
    cdef Py_ssize_t n = h.shape[0]
    a_arr = np.array(h, dtype=np.complex128)
    cdef double complex[:, ::1] a = a_arr
    if n == 1:
        return np.array([a_arr[0, 0].real])
    cdef Py_ssize_t p, q, k, sweep
    cdef double off, r, tau, t, c, s, app, aqq
    cdef double complex apq, v, vb, colp, colq, rowp, rowq
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) > off:
                    off = abs(a[p, q])
        if off <= tol:
            return np.diag(a_arr).real.copy()
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= tol * 0.01 or r < 1e-300:
                    continue
                v = apq / r
                vb = v.conjugate()
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * r)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    colp = a[k, p]
                    colq = a[k, q]
                    a[k, p] = c * colp - s * vb * colq
                    a[k, q] = s * colp + c * vb * colq
                for k in range(n):
                    rowp = a[p, k]
                    rowq = a[q, k]
                    a[p, k] = c * rowp - s * v * rowq
                    a[q, k] = s * rowp + c * v * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    raise RuntimeError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
