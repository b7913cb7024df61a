# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures mirror :mod:`polarbandit._fallback`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


def jacobi_eigh(double[:, ::1] a_in, double tol=1e-14, int max_sweeps=100):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns ``(values, vectors, sweeps)``; values are unsorted, vectors are
    columns. ``sweeps == -1`` signals that ``max_sweeps`` was exhausted.
    """
    cdef Py_ssize_t n = a_in.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a_arr = np.array(a_in, dtype=np.float64, order="C")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] v_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] a = a_arr
    cdef double[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, k
    cdef int sweep
    cdef double off, total, apq, theta, t, c, s, akp, akq, vkp, vkq, app, aqq

    total = 0.0
    for p in range(n):
        for q in range(n):
            total += a[p, q] * a[p, q]
    if total == 0.0:
        return np.zeros(n), v_arr, 0

    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if sqrt(2.0 * off) <= tol * sqrt(total):
            return np.array([a[k, k] for k in range(n)]), v_arr, sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if fabs(apq) < 1e-300:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + sqrt(1.0 + theta * theta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    akp = a[p, k]
                    akq = a[q, k]
                    a[p, k] = c * akp - s * akq
                    a[q, k] = s * akp + c * akq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return np.array([a[k, k] for k in range(n)]), v_arr, -1


def chol_update(double[:, ::1] lower, double[::1] x_in):
    """In-place rank-one update: ``lower @ lower.T + x x^T``."""
    cdef Py_ssize_t n = lower.shape[0]
    cdef Py_ssize_t k, i
    cdef double r, c, s, lkk
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x_arr = np.array(x_in, dtype=np.float64)
    cdef double[::1] x = x_arr
    for k in range(n):
        lkk = lower[k, k]
        r = sqrt(lkk * lkk + x[k] * x[k])
        c = r / lkk
        s = x[k] / lkk
        lower[k, k] = r
        for i in range(k + 1, n):
            lower[i, k] = (lower[i, k] + s * x[i]) / c
            x[i] = c * x[i] - s * lower[i, k]


def fj_sweep(double[::1] z, double[::1] s, long[::1] indptr, long[::1] indices,
             double[::1] weights, double[::1] degree, double[::1] out):
    """One synchronous FJ update into ``out``; returns max |out - z|."""
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t i, k
    cdef double acc, diff, worst = 0.0
    for i in range(n):
        acc = s[i]
        for k in range(indptr[i], indptr[i + 1]):
            acc += weights[k] * z[indices[k]]
        out[i] = acc / (degree[i] + 1.0)
        diff = fabs(out[i] - z[i])
        if diff > worst:
            worst = diff
    return worst
