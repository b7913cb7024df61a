"""Curvature diagnostics for arm sets: exact kappa_min and the PGD estimate kappa-hat.

kappa-hat is a heuristic computed with oracle access to ``s``. It is an
upper estimate of a non-convex minimum, not a certified lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arms import ArmSet
from .numerics import orthonormal_completion, symmetrize

NEG_CLAMP = 1e-10


@dataclass(frozen=True)
class ConeSpec:
    s_direction: np.ndarray
    cone_factor: float = 3.0

    @classmethod
    def from_opinions(cls, s, cone_factor: float = 3.0):
        s = np.asarray(s, dtype=float)
        return cls(s / np.linalg.norm(s), cone_factor)

    def split(self, delta):
        """``(model part, orthogonal part)``; the model part is ``P D + D P - P D P``."""
        u = self.s_direction
        du = delta @ u
        ud = u @ delta
        udu = float(u @ du)
        model = np.outer(u, ud) + np.outer(du, u) - udu * np.outer(u, u)
        return model, delta - model

    def contains(self, delta, atol: float = 1e-9) -> bool:
        model, rest = self.split(delta)
        return _nuc(rest) <= self.cone_factor * _nuc(model) + atol


@dataclass
class CurvatureReport:
    kappa_min: float
    kappa_hat: float
    restarts: int
    pgd_iterations: int
    converged: bool
    running_best: list


def _nuc(a) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(symmetrize(a)))))


def _subspace_vectors(arms: ArmSet, subspace: str) -> np.ndarray:
    n = arms.n
    if subspace == "full":
        return arms.vectors()
    if subspace == "symmetric":
        mats = arms.forests
    elif subspace == "centered":
        q = orthonormal_completion(np.full(n, 1.0 / np.sqrt(n)))
        mats = np.einsum("ai,kab,bj->kij", q, arms.forests, q)
    else:
        raise ValueError(f"unknown subspace {subspace!r}")
    m = mats.shape[-1]
    iu = np.triu_indices(m)
    scale = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    return mats[:, iu[0], iu[1]] * scale


def kappa_min(arms: ArmSet, subspace: str = "full") -> float:
    """Smallest eigenvalue of ``(1/K) sum vec(X) vec(X)^T``.

    ``subspace`` restricts the quadratic form to a coordinate system in
    which the arms can actually be told apart:

    * ``"full"``: all ``n^2`` row-major coordinates. Every symmetric arm is
      blind to antisymmetric directions, so this is 0 for ``n >= 2``.
    * ``"symmetric"``: isometric half-vectorisation of symmetric matrices.
      Still 0 for forest matrices, since ``X 1 = 1`` makes every
      ``a 1^T + 1 a^T`` with ``a`` orthogonal to ``1`` invisible.
    * ``"centered"``: symmetric matrices acting on the complement of the
      all-ones vector (arms compressed to ``Q^T X Q``), dimension
      ``n(n-1)/2``. This is the informative diversity number.

    The second-moment matrix has rank at most ``K``, so 0 is returned
    without factorising when ``K`` is below the dimension.
    """
    vecs = _subspace_vectors(arms, subspace)
    K, dim = vecs.shape
    if K < dim:
        return 0.0
    value = float(np.linalg.eigvalsh(vecs.T @ vecs / K)[0])
    return max(value, 0.0) if value > -NEG_CLAMP else value


def cone_project(delta, cone: ConeSpec) -> np.ndarray:
    """Shrink the orthogonal part onto the cone boundary when the cone test fails."""
    delta = np.asarray(delta, dtype=float)
    model, rest = cone.split(delta)
    m_nuc, r_nuc = _nuc(model), _nuc(rest)
    limit = cone.cone_factor * m_nuc
    if r_nuc > limit:
        rest = rest * (limit / r_nuc)
    return model + rest


def _rank2(delta):
    w, u = np.linalg.eigh(symmetrize(delta))
    keep = np.argsort(-np.abs(w), kind="stable")[:2]
    return (u[:, keep] * w[keep]) @ u[:, keep].T


def _feasible(delta, cone):
    """Rank-2, cone, unit norm; ``None`` when the cone step annihilates the iterate."""
    delta = cone_project(_rank2(delta), cone)
    norm = np.linalg.norm(delta)
    return delta / norm if norm > 1e-12 else None


def kappa_hat_pgd(arms: ArmSet, cone: ConeSpec, sample_indices=None, restarts: int = 10,
                  iters: int = 300, step: float | None = None, seed=None) -> CurvatureReport:
    """Projected gradient estimate of ``min (1/T) sum <X_t, D>^2``.

    The minimum runs over symmetric ``D`` with unit Frobenius norm, inside
    the cone, projected to rank two each step. Each iteration takes a
    gradient step, keeps the two largest-magnitude eigenpairs, projects onto
    the cone and renormalises. Every iterate is feasible, so the best
    objective seen over all restarts is reported.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    idx = np.arange(len(arms)) if sample_indices is None else np.asarray(sample_indices)
    design = arms.vectors()[idx]
    T, n = len(idx), arms.n
    if step is None:
        gram = design @ design.T if T <= design.shape[1] else design.T @ design
        step = 1.0 / (2.0 * float(np.linalg.eigvalsh(gram / T)[-1]))

    def objective(d):
        r = design @ d.ravel()
        return float(r @ r) / T, r

    best = np.inf
    running = []
    total_iters = 0
    converged = False
    for _ in range(restarts):
        delta = None
        while delta is None:
            delta = _feasible(symmetrize(rng.standard_normal((n, n))), cone)
        val, r = objective(delta)
        best = min(best, val)
        converged = False
        for _ in range(iters):
            grad = (2.0 / T) * (design.T @ r).reshape(n, n)
            new = _feasible(delta - step * grad, cone)
            total_iters += 1
            if new is None:
                break
            change = np.linalg.norm(new - delta)
            delta = new
            val, r = objective(delta)
            best = min(best, val)
            if change < 1e-10:
                converged = True
                break
        running.append(best)
    return CurvatureReport(kappa_min(arms), max(best, 0.0), restarts, total_iters, converged,
                           running)
