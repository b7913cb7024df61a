"""Dense symmetric linear algebra shared by the rest of the package."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from . import kernels
from .errors import ConvergenceFailure, NotPositiveDefinite, NotUnitVector

POWER_ITER_CAP = 10_000


class EigenDecomp(NamedTuple):
    """Eigenvalues in descending order and matching orthonormal columns."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def fix_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its largest-magnitude entry (lowest index on ties) is positive."""
    if v.size == 0:
        return v
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def spd_solve(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` for symmetric positive definite ``a`` by Cholesky.

    Raises
    ------
    NotPositiveDefinite
        If the factorization meets a non-positive pivot.
    """
    a = np.asarray(a, dtype=float)
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return scipy.linalg.cho_solve(factor, np.asarray(b, dtype=float), check_finite=False)


def sym_eig(a, method: str = "lapack") -> EigenDecomp:
    """Full eigendecomposition of a symmetric matrix.

    ``method="lapack"`` calls ``numpy.linalg.eigh``; ``method="jacobi"`` runs
    cyclic Jacobi rotations in the kernel backend. Each eigenvector carries
    the :func:`fix_sign` convention so results are reproducible.
    """
    a = np.asarray(a, dtype=float)
    if method == "lapack":
        values, vectors = np.linalg.eigh(a)
    elif method == "jacobi":
        values, vectors, sweeps = kernels.jacobi_eigh(np.ascontiguousarray(a))
        if sweeps < 0:
            raise ConvergenceFailure("Jacobi sweeps exhausted")
    else:
        raise ValueError(f"unknown eigen method {method!r}")
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    for j in range(vectors.shape[1]):
        vectors[:, j] = fix_sign(vectors[:, j])
    return EigenDecomp(values, vectors)


def top_eigvec(a, tol: float = 1e-10, max_iter: int = POWER_ITER_CAP, start=None):
    """Largest (algebraic) eigenpair by shifted power iteration.

    The shift comes from the Gershgorin lower bound, so the iteration targets
    the algebraically largest eigenvalue even when negative eigenvalues have
    larger magnitude. Stops once ``||a v - lam v|| <= tol``.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n == 1:
        return float(a[0, 0]), np.ones(1)
    radius = np.sum(np.abs(a), axis=1) - np.abs(np.diag(a))
    shift = max(0.0, -float(np.min(np.diag(a) - radius)))
    if start is None:
        v = np.random.default_rng(0x5EED).standard_normal(n)
    else:
        v = np.array(start, dtype=float)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        av = a @ v
        lam = float(v @ av)
        if np.linalg.norm(av - lam * v) <= tol:
            return lam, fix_sign(v)
        w = av + shift * v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            # a + shift*I annihilates v; only possible for a == 0
            return 0.0, fix_sign(v)
        v = w / norm
    raise ConvergenceFailure(f"power iteration did not reach tol={tol} in {max_iter} steps")


def svd_soft_threshold(a, tau: float, method: str = "lapack") -> np.ndarray:
    """Nuclear-norm prox for symmetric input: shrink |eigenvalues| by ``tau``."""
    dec = sym_eig(a, method=method)
    shrunk = np.sign(dec.values) * np.maximum(np.abs(dec.values) - tau, 0.0)
    keep = shrunk != 0.0
    v = dec.vectors[:, keep]
    return symmetrize((v * shrunk[keep]) @ v.T)


def nuclear_norm(a) -> float:
    return float(np.sum(np.linalg.svd(np.asarray(a, dtype=float), compute_uv=False)))


def orthonormal_completion(v) -> np.ndarray:
    """Columns 2..n of the Householder reflector taking ``e1`` to ``+-v``.

    The returned ``n x (n-1)`` block is orthonormal and orthogonal to ``v``.
    """
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise NotUnitVector(f"norm {np.linalg.norm(v)!r} != 1")
    n = v.shape[0]
    # u = e1 + sign(v1) v avoids cancellation; reflector maps e1 to -sign(v1) v
    sign = 1.0 if v[0] >= 0 else -1.0
    u = sign * v
    u[0] += 1.0
    h = np.eye(n) - 2.0 * np.outer(u, u) / (u @ u)
    return h[:, 1:]
