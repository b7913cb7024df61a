"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def jacobi_eigh(a_in, tol=1e-14, max_sweeps=100):
    a = np.array(a_in, dtype=np.float64, order="C")
    n = a.shape[0]
    v = np.eye(n)
    total = np.sqrt(np.sum(a * a))
    if total == 0.0:
        return np.zeros(n), v, 0
    iu = np.triu_indices(n, 1)
    for sweep in range(max_sweeps):
        if np.sqrt(2.0 * np.sum(a[iu] ** 2)) <= tol * total:
            return np.diag(a).copy(), v, sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + np.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q]
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :]
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, -1


def chol_update(lower, x_in):
    x = np.array(x_in, dtype=np.float64)
    n = lower.shape[0]
    for k in range(n):
        lkk = lower[k, k]
        r = np.hypot(lkk, x[k])
        c = r / lkk
        s = x[k] / lkk
        lower[k, k] = r
        if k + 1 < n:
            col = (lower[k + 1:, k] + s * x[k + 1:]) / c
            lower[k + 1:, k] = col
            x[k + 1:] = c * x[k + 1:] - s * col


def fj_sweep(z, s, indptr, indices, weights, degree, out):
    # row id of every stored entry; bincount leaves isolated nodes at zero
    rows = np.repeat(np.arange(len(z)), np.diff(indptr))
    neighbor_sum = np.bincount(rows, weights=weights * z[indices], minlength=len(z))
    out[:] = (neighbor_sum + s) / (degree + 1.0)
    return float(np.max(np.abs(out - z))) if len(z) else 0.0
