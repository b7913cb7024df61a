"""OFUL in arbitrary dimension and the three end-to-end learners."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .arms import ArmSet
from .environment import Environment, RegretTrace
from .errors import DimensionMismatch
from .stage1 import ThetaEstimate, estimate_theta, explore, lambda_schedule, reduce_armset

log = logging.getLogger(__name__)

RESIDUAL_LIMIT = 1e-6


class OFUL:
    """Ridge-regression linear bandit that plays the lower confidence bound.

    Losses are minimised, so optimism means picking
    ``argmin_x x^T theta_hat - beta_t ||x||_{A^{-1}}``.

    The design matrix ``A = lambda_reg I + sum x x^T`` is kept as a lower
    Cholesky factor updated in place each round. When a feature matrix is
    bound with :meth:`bind`, the per-arm widths ``x^T A^{-1} x`` are updated
    by Sherman-Morrison in ``O(K d)`` after the ``O(d^2)`` solve, and
    recomputed exactly every ``refresh_every`` updates; the ridge estimate
    follows the matching recursive least-squares update.
    """

    def __init__(self, d: int, lambda_reg: float = 0.1, S_bound: float = 1.0,
                 Lx_bound: float = 1.0, sigma: float = 1.0, delta: float = 1e-3,
                 beta_mode: str = "determinant", beta_override: float | None = None,
                 refresh_every: int = 200):
        if lambda_reg <= 0:
            raise ValueError("lambda_reg must be positive")
        if beta_mode not in ("determinant", "dimensional"):
            raise ValueError(f"unknown beta mode {beta_mode!r}")
        self.d = d
        self.lambda_reg = float(lambda_reg)
        self.S_bound = float(S_bound)
        self.Lx_bound = float(Lx_bound)
        self.sigma = float(sigma)
        self.delta = float(delta)
        self.beta_mode = beta_mode
        self.beta_override = beta_override
        self.refresh_every = refresh_every
        self.A = self.lambda_reg * np.eye(d)
        self.chol = math.sqrt(self.lambda_reg) * np.eye(d)
        self.b = np.zeros(d)
        self.t = 0
        self.logdet_ratio = 0.0  # log det(A) - d log(lambda_reg)
        self.theta = np.zeros(d)
        self._pending = []
        self.features = None
        self.widths = None
        self.residual_warnings = 0

    # linear algebra -------------------------------------------------------
    def solve(self, v):
        return scipy.linalg.cho_solve((self.chol, True), v, check_finite=False)

    def theta_hat(self) -> np.ndarray:
        return self.theta

    def beta(self) -> float:
        if self.beta_override is not None:
            return float(self.beta_override)
        root_lam = math.sqrt(self.lambda_reg) * self.S_bound
        if self.beta_mode == "determinant":
            radius = 2.0 * (0.5 * self.logdet_ratio + math.log(1.0 / self.delta))
        else:
            radius = self.d * math.log((1.0 + self.t * self.Lx_bound ** 2 / self.lambda_reg)
                                       / self.delta)
        return self.sigma * math.sqrt(radius) + root_lam

    def exact_widths(self, features) -> np.ndarray:
        w = scipy.linalg.solve_triangular(self.chol, np.asarray(features).T, lower=True,
                                          check_finite=False)
        return np.einsum("ij,ij->j", w, w)

    # bandit interface -----------------------------------------------------
    def bind(self, features) -> "OFUL":
        features = np.ascontiguousarray(features, dtype=float)
        if features.ndim != 2 or features.shape[1] != self.d:
            raise DimensionMismatch(f"features {features.shape} vs d={self.d}")
        self.features = features
        self.widths = self.exact_widths(features)
        return self

    def scores(self, features=None) -> np.ndarray:
        if features is None:
            features, widths = self.features, self.widths
        else:
            features = np.asarray(features, dtype=float)
            if features.ndim != 2 or features.shape[1] != self.d:
                raise DimensionMismatch(f"features {features.shape} vs d={self.d}")
            widths = self.exact_widths(features)
        return features @ self.theta_hat() - self.beta() * np.sqrt(np.maximum(widths, 0.0))

    def select(self, features=None) -> int:
        """Index of the optimistic (lowest lower-confidence-bound) arm; ties to lowest index."""
        return int(np.argmin(self.scores(features)))

    def update(self, x, y: float) -> "OFUL":
        x = np.ascontiguousarray(x, dtype=float)
        if x.shape != (self.d,):
            raise DimensionMismatch(f"x of shape {x.shape} vs d={self.d}")
        g = self.solve(x)
        q = float(x @ g)
        if self.features is not None:
            proj = self.features @ g
            self.widths -= proj * proj / (1.0 + q)
        # recursive least squares: theta += g (y - x^T theta) / (1 + q)
        self.theta = self.theta + g * ((y - x @ self.theta) / (1.0 + q))
        kernels.chol_update(self.chol, x)
        self._pending.append(x)
        self.b += y * x
        self.t += 1
        self.logdet_ratio += math.log1p(q)
        if self.t % self.refresh_every == 0:
            self._refresh()
        return self

    def design_matrix(self) -> np.ndarray:
        """Explicitly accumulated ``A`` (independent of the Cholesky factor)."""
        if self._pending:
            rows = np.asarray(self._pending)
            self.A += rows.T @ rows
            self._pending = []
        return self.A

    def _refresh(self):
        self.theta = self.solve(self.b)
        if self.features is None:
            return
        self.widths = self.exact_widths(self.features)
        probe = self.features[0]
        resid = np.linalg.norm(self.design_matrix() @ self.solve(probe) - probe) / max(np.linalg.norm(probe), 1e-300)
        if resid > RESIDUAL_LIMIT:
            self.residual_warnings += 1
            log.warning("design solve residual %.2e exceeds %.0e at t=%d", resid,
                        RESIDUAL_LIMIT, self.t)


def oful_select(state: OFUL, features) -> int:
    return state.select(features)


def oful_update(state: OFUL, x, y) -> OFUL:
    return state.update(x, y)


@dataclass
class LearnerConfig:
    """Knobs shared by the three learners."""

    T: int = 10_000
    T1: int = 100
    delta: float = 1e-3
    lambda_reg: float = 0.1
    lambda_mode: str = "experiment"
    lambda_nuc: float | None = None
    lambda_scale: float = 0.01
    center: bool = True
    explore_mode: str = "auto"
    beta_mode: str = "determinant"
    lx_mode: str = "sqrt"
    warm_start: bool = False
    prox_max_iter: int = 5000
    prox_tol: float = 1e-9
    beta_override: float | None = None

    def __post_init__(self):
        if not self.T >= self.T1 >= 1:
            raise ValueError("need T >= T1 >= 1")

    def nuclear_weight(self, n: int) -> float:
        if self.lambda_nuc is not None:
            return float(self.lambda_nuc)
        return self.lambda_scale * lambda_schedule(n, self.T1, self.delta, self.lambda_mode)

    def lx(self, n: int) -> float:
        return math.sqrt(n) if self.lx_mode == "sqrt" else float(n)


def _play(oful: OFUL, env: Environment, losses, trace: RegretTrace, rounds: int):
    feats = oful.features
    for _ in range(rounds):
        i = oful.select()
        trace.record(i, losses[i])
        oful.update(feats[i], losses[i] + env.noise())


def _reduced_oful(n, cfg: LearnerConfig, sigma, features) -> OFUL:
    return OFUL(2 * n - 1, cfg.lambda_reg, S_bound=n, Lx_bound=math.sqrt(2.0) * cfg.lx(n),
                sigma=sigma, delta=cfg.delta, beta_mode=cfg.beta_mode,
                beta_override=cfg.beta_override).bind(features)


def run_estr(env: Environment, arms: ArmSet, cfg: LearnerConfig, seed=None):
    """Explore-subspace-then-refine. Returns ``(trace, estimate)``.

    Exploration rounds are charged to the regret trace.
    """
    losses = env.true_losses(arms)
    trace = RegretTrace(float(losses.min()))
    n = arms.n
    t0 = time.perf_counter()
    samples = explore(env, arms, cfg.T1, seed, cfg.explore_mode)
    for i, _ in samples:
        trace.record(i, losses[i])
    est = estimate_theta(samples, arms, cfg.nuclear_weight(n), max_iter=cfg.prox_max_iter,
                         tol=cfg.prox_tol, center=cfg.center)
    features = reduce_armset(arms, est)
    t1 = time.perf_counter()
    oful = _reduced_oful(n, cfg, env.sigma, features)
    if cfg.warm_start:
        for i, y in samples:
            oful.update(features[i], y)
    _play(oful, env, losses, trace, cfg.T - cfg.T1)
    t2 = time.perf_counter()
    trace.timings = {"stage1": t1 - t0, "stage2": t2 - t1, "total": t2 - t0,
                     "per_round_stage2": (t2 - t1) / max(cfg.T - cfg.T1, 1)}
    return trace, est


def run_oracle_subspace(env: Environment, arms: ArmSet, cfg: LearnerConfig):
    """Stage 2 from round one with the true direction ``s / ||s||``."""
    losses = env.true_losses(arms)
    trace = RegretTrace(float(losses.min()))
    t0 = time.perf_counter()
    est = ThetaEstimate.from_direction(env.s)
    oful = _reduced_oful(arms.n, cfg, env.sigma, reduce_armset(arms, est))
    _play(oful, env, losses, trace, cfg.T)
    t1 = time.perf_counter()
    trace.timings = {"stage2": t1 - t0, "total": t1 - t0,
                     "per_round_stage2": (t1 - t0) / cfg.T}
    return trace


def run_full_oful(env: Environment, arms: ArmSet, cfg: LearnerConfig):
    """OFUL on the row-major vectorised forests, ``d = n^2``."""
    losses = env.true_losses(arms)
    trace = RegretTrace(float(losses.min()))
    n = arms.n
    t0 = time.perf_counter()
    oful = OFUL(n * n, cfg.lambda_reg, S_bound=n, Lx_bound=cfg.lx(n), sigma=env.sigma,
                delta=cfg.delta, beta_mode=cfg.beta_mode,
                beta_override=cfg.beta_override).bind(arms.vectors())
    _play(oful, env, losses, trace, cfg.T)
    t1 = time.perf_counter()
    trace.timings = {"total": t1 - t0, "per_round": (t1 - t0) / cfg.T}
    return trace
