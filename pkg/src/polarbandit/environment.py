"""Hidden innate opinions, noisy loss oracle, and regret bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arms import Arm, ArmSet
from .errors import DimensionMismatch, MeanNotCentered

CENTER_TOL = 1e-9


class Environment:
    """Ground truth ``Theta* = s s^T`` with Gaussian observation noise.

    ``Theta*`` is never formed; losses are evaluated as quadratic forms.
    """

    def __init__(self, s, sigma: float, noise_seed=None):
        s = np.asarray(s, dtype=float)
        if sigma < 0:
            raise ValueError("sigma must be >= 0")
        if abs(s.mean()) > CENTER_TOL:
            raise MeanNotCentered(f"mean(s) = {s.mean():.3e}")
        if not np.any(s):
            raise ValueError("innate opinions must not all be zero")
        if s @ s > s.size + 1e-9:
            raise ValueError("||s||^2 exceeds n")
        self.s = s
        self.sigma = float(sigma)
        self.noise_seed = noise_seed
        self.rng = np.random.default_rng(noise_seed)

    @property
    def n(self) -> int:
        return self.s.size

    def with_noise_seed(self, noise_seed) -> "Environment":
        """Same opinions, fresh noise stream."""
        return Environment(self.s, self.sigma, noise_seed)

    def true_loss(self, arm) -> float:
        x = arm.forest if isinstance(arm, Arm) else np.asarray(arm)
        if x.shape != (self.n, self.n):
            raise DimensionMismatch(f"arm of shape {x.shape} vs n={self.n}")
        return float(self.s @ x @ self.s)

    def true_losses(self, arms: ArmSet) -> np.ndarray:
        if arms.n != self.n:
            raise DimensionMismatch(f"arm set over n={arms.n} vs n={self.n}")
        return np.einsum("i,kij,j->k", self.s, arms.forests, self.s)

    def observe(self, arm) -> float:
        return self.true_loss(arm) + self.noise()

    def noise(self) -> float:
        if self.sigma == 0.0:
            return 0.0
        return float(self.sigma * self.rng.standard_normal())


def best_arm(env: Environment, arms: ArmSet) -> tuple[int, float]:
    """Exhaustive argmin of the true loss; ties go to the lowest index."""
    losses = env.true_losses(arms)
    i = int(np.argmin(losses))
    return i, float(losses[i])


@dataclass
class RegretTrace:
    """Per-round regret measured on noiseless losses."""

    best_value: float
    chosen: list = field(default_factory=list)
    instant: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def record(self, chosen: int, true_value: float) -> float:
        r = true_value - self.best_value
        self.chosen.append(int(chosen))
        self.instant.append(r)
        return r

    def extend(self, chosen, true_values):
        for c, v in zip(chosen, true_values):
            self.record(c, v)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(np.asarray(self.instant, dtype=float))

    @property
    def total(self) -> float:
        return float(np.sum(self.instant))

    def __len__(self) -> int:
        return len(self.instant)


def record(trace: RegretTrace, chosen: int, env: Environment, arms: ArmSet) -> RegretTrace:
    trace.record(chosen, env.true_loss(arms[chosen]))
    return trace
