"""Exploration stage: nuclear-norm least squares and subspace reduction."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .arms import ArmSet
from .errors import ConvergenceFailure
from .numerics import fix_sign, orthonormal_completion, symmetrize, top_eigvec

log = logging.getLogger(__name__)

LIPSCHITZ_SAFETY = 0.95
DEGENERATE_NORM = 1e-12


@dataclass
class ThetaEstimate:
    theta_hat: np.ndarray
    s_hat: np.ndarray
    s_perp: np.ndarray
    lambda_used: float
    prox_iterations: int
    final_objective: float
    degenerate: bool = False
    objective_history: list = field(default_factory=list, repr=False)

    @classmethod
    def from_direction(cls, s_hat, lambda_used=0.0):
        """Estimate whose subspace is a given direction (oracle baseline, tests)."""
        s_hat = np.asarray(s_hat, dtype=float)
        s_hat = s_hat / np.linalg.norm(s_hat)
        return cls(np.outer(s_hat, s_hat), s_hat, orthonormal_completion(s_hat),
                   lambda_used, 0, 0.0)


def explore(env, arms: ArmSet, T1: int, seed=None, mode: str = "auto"):
    """Pull ``T1`` arms and return ``[(index, observed_loss), ...]``.

    ``mode="without"`` walks shuffled passes over the arm set,
    ``mode="with"`` draws i.i.d. uniform indices, and ``mode="auto"`` uses
    the former when ``T1 <= K`` and the latter otherwise.
    """
    if T1 < 1:
        raise ValueError("T1 must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    K = len(arms)
    if mode == "auto":
        mode = "without" if T1 <= K else "with"
    if mode == "with":
        idx = rng.integers(0, K, size=T1)
    elif mode == "without":
        passes = [rng.permutation(K) for _ in range(-(-T1 // K))]
        idx = np.concatenate(passes)[:T1]
    else:
        raise ValueError(f"unknown explore mode {mode!r}")
    losses = env.true_losses(arms)
    return [(int(i), float(losses[i] + env.noise())) for i in idx]


def lambda_schedule(n: int, T1: int, delta: float = 1e-3, mode: str = "experiment") -> float:
    """Nuclear-norm weight.

    ``theory``: ``2 sqrt(2 ln(2n/delta) / T1)``.
    ``experiment``: ``(2 / sqrt(T1)) sqrt(ln(2 n^2 / 0.01))``.
    """
    if T1 < 1 or not 0 < delta < 1:
        raise ValueError("need T1 >= 1 and 0 < delta < 1")
    if mode == "theory":
        return 2.0 * math.sqrt(2.0 * math.log(2.0 * n / delta) / T1)
    if mode == "experiment":
        return 2.0 / math.sqrt(T1) * math.sqrt(math.log(2.0 * n * n / 1e-2))
    raise ValueError(f"unknown lambda mode {mode!r}")


def center_forests(forests: np.ndarray) -> np.ndarray:
    """``P X P`` with ``P = I - 11^T/n`` for a stack of symmetric matrices."""
    n = forests.shape[-1]
    r = forests.sum(axis=-1) / n
    total = r.sum(axis=-1) / n
    return forests - r[..., :, None] - r[..., None, :] + total[..., None, None]


def _lipschitz(design: np.ndarray) -> float:
    t = design.shape[0]
    small = design @ design.T if t <= design.shape[1] else design.T @ design
    small /= t
    try:
        lam, _ = top_eigvec(small, tol=1e-8 * max(1.0, np.trace(small)))
    except ConvergenceFailure:
        lam = float(np.linalg.eigvalsh(small)[-1])
    return lam


def estimate_theta(samples, arms: ArmSet, lam: float, *, step: float | None = None,
                   max_iter: int = 5000, tol: float = 1e-9, center: bool = True,
                   backtracking: bool = False) -> ThetaEstimate:
    """Nuclear-norm penalised least squares by proximal gradient.

    Minimises ``(1/2T) sum (y_t - <X_t, Theta>)^2 + lam ||Theta||_*`` over
    symmetric ``Theta``. With ``center=True`` every arm is replaced by
    ``P X P`` (``P`` the centring projector); this leaves the responses of
    any mean-zero ``s`` unchanged and removes the all-ones direction, which
    every forest matrix shares and which otherwise absorbs the fit.

    The step is ``0.95 / L`` with ``L`` the top eigenvalue of the empirical
    design covariance (power iteration); ``backtracking`` halves it while the
    sufficient-decrease test fails. Iteration stops once the relative
    objective decrease drops below ``tol``.
    """
    if not samples:
        raise ValueError("samples must be non-empty")
    idx = np.fromiter((i for i, _ in samples), dtype=np.int64)
    y = np.fromiter((v for _, v in samples), dtype=float)
    n = arms.n
    forests = arms.forests[idx]
    if center:
        forests = center_forests(forests)
    design = forests.reshape(len(idx), -1)
    T1 = len(idx)

    if step is None:
        lip = _lipschitz(design)
        step = LIPSCHITZ_SAFETY / lip if lip > 0 else 1.0

    def smooth(theta_vec):
        r = design @ theta_vec - y
        return 0.5 * float(r @ r) / T1, r

    def prox(z, t):
        w, u = np.linalg.eigh(symmetrize(z))
        shrunk = np.sign(w) * np.maximum(np.abs(w) - t * lam, 0.0)
        keep = shrunk != 0.0
        theta = symmetrize((u[:, keep] * shrunk[keep]) @ u[:, keep].T)
        return theta, float(np.sum(np.abs(shrunk)))

    theta = np.zeros((n, n))
    f_val, resid = smooth(theta.ravel())
    obj = f_val
    history = [obj]
    it = 0
    for it in range(1, max_iter + 1):
        grad = (design.T @ resid / T1).reshape(n, n)
        while True:
            cand, nuc = prox(theta - step * grad, step)
            f_cand, r_cand = smooth(cand.ravel())
            if not backtracking:
                break
            diff = (cand - theta).ravel()
            bound = f_val + grad.ravel() @ diff + 0.5 / step * (diff @ diff)
            if f_cand <= bound + 1e-15 * max(1.0, abs(f_val)):
                break
            step *= 0.5
        new_obj = f_cand + lam * nuc
        theta, f_val, resid = cand, f_cand, r_cand
        history.append(new_obj)
        decrease = obj - new_obj
        obj = new_obj
        if decrease <= tol * max(abs(history[-2]), 1e-300):
            break
    else:
        log.info("prox-gradient stopped at max_iter=%d", max_iter)

    s_hat, degenerate = _top_direction(theta)
    return ThetaEstimate(theta, s_hat, orthonormal_completion(s_hat), lam, it, obj,
                         degenerate, history)


def _top_direction(theta):
    norm = np.linalg.norm(theta)
    n = theta.shape[0]
    if norm < DEGENERATE_NORM:
        log.warning("degenerate estimate (||Theta|| = %.2e); falling back to e1", norm)
        e1 = np.zeros(n)
        e1[0] = 1.0
        return e1, True
    try:
        value, vec = top_eigvec(theta, tol=1e-10 * max(1.0, norm))
    except ConvergenceFailure:
        w, u = np.linalg.eigh(theta)
        value, vec = float(w[-1]), u[:, -1]
    if value <= 0.0:
        # no positive direction: use the dominant singular direction instead
        w, u = np.linalg.eigh(theta)
        vec = u[:, int(np.argmax(np.abs(w)))]
    vec = vec / np.linalg.norm(vec)
    return fix_sign(vec), False


def reduce_armset(arms: ArmSet, est: ThetaEstimate) -> np.ndarray:
    """Rotated reduced features, one row of length ``2n - 1`` per arm.

    Row ``k`` is ``[s^T X s, S_perp^T X s, S_perp^T X s]`` for arm ``k``; the
    off-diagonal block appears twice (column and row of the rotated matrix).
    Only ``u = X s`` is formed, never the full rotation.
    """
    u = arms.forests @ est.s_hat
    head = u @ est.s_hat
    tail = u @ est.s_perp
    return np.column_stack([head, tail, tail])


def reduced_theta(est: ThetaEstimate, s) -> np.ndarray:
    """Projected parameter ``[s^T T s, S_perp^T T s, (s^T T S_perp)^T]`` of ``T = s s^T``."""
    s = np.asarray(s, dtype=float)
    a = float(est.s_hat @ s)
    b = est.s_perp.T @ s
    return np.concatenate([[a * a], a * b, a * b])


def residual_loss(arm_forest, est: ThetaEstimate, s) -> float:
    """Contribution of the discarded block ``<S_perp^T X S_perp, S_perp^T T S_perp>``."""
    b = est.s_perp.T @ np.asarray(s, dtype=float)
    return float(b @ (est.s_perp.T @ arm_forest @ est.s_perp) @ b)


def subspace_error(est: ThetaEstimate, s):
    """``(||S_perp^T s|| ||s||, ||Theta_hat - s s^T||_F)``: the sin-theta check pair."""
    s = np.asarray(s, dtype=float)
    lhs = float(np.linalg.norm(est.s_perp.T @ s) * np.linalg.norm(s))
    rhs = float(np.linalg.norm(est.theta_hat - np.outer(s, s)))
    return lhs, rhs
