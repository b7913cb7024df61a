"""Intervention space: Laplacians and their forest matrices ``(I + L)^{-1}``."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .graph import WeightedGraph, laplacian, make_graph
from .numerics import spd_solve, symmetrize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Arm:
    laplacian: np.ndarray
    forest: np.ndarray
    index: int


def forest_matrix(lap: np.ndarray) -> np.ndarray:
    n = lap.shape[0]
    return symmetrize(spd_solve(np.eye(n) + lap, np.eye(n)))


class ArmSet:
    """``K`` arms over ``n`` nodes, stored as stacked ``(K, n, n)`` arrays."""

    def __init__(self, laplacians, forests=None):
        laplacians = np.asarray(laplacians, dtype=float)
        if laplacians.ndim != 3 or laplacians.shape[1] != laplacians.shape[2]:
            raise ValueError("laplacians must have shape (K, n, n)")
        if forests is None:
            forests = np.stack([forest_matrix(lap) for lap in laplacians])
        self.laplacians = laplacians
        self.forests = np.asarray(forests, dtype=float)

    @classmethod
    def from_graphs(cls, graphs):
        return cls(np.stack([laplacian(g) for g in graphs]))

    @property
    def n(self) -> int:
        return self.laplacians.shape[1]

    def __len__(self) -> int:
        return self.laplacians.shape[0]

    def __getitem__(self, i) -> Arm:
        return Arm(self.laplacians[i], self.forests[i], int(i))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def vectors(self) -> np.ndarray:
        """Row-major vectorised forests, shape ``(K, n*n)``."""
        return self.forests.reshape(len(self), -1)

    def subset(self, indices) -> "ArmSet":
        idx = np.asarray(indices)
        return ArmSet(self.laplacians[idx], self.forests[idx])


def vectorize(arm) -> np.ndarray:
    """Row-major flattening of an arm's forest matrix (or of a bare matrix)."""
    x = arm.forest if isinstance(arm, Arm) else np.asarray(arm, dtype=float)
    return x.reshape(-1).copy()


def _edge_update(lap, i, j, w):
    lap[i, i] += w
    lap[j, j] += w
    lap[i, j] -= w
    lap[j, i] -= w


def perturb_local(base: WeightedGraph, num_edits: int, weight_lo: float, weight_hi: float,
                  K: int, seed=None, allow_removal: bool = False) -> ArmSet:
    """``K`` arms, each the base Laplacian plus ``num_edits`` random edge edits.

    Every edit picks a uniform node pair and a weight ``w ~ U[weight_lo,
    weight_hi]``, adding ``w (e_i - e_j)(e_i - e_j)^T``. With
    ``allow_removal`` each edit is instead a removal with probability 1/2,
    subtracting ``min(w, current weight)`` so the Laplacian stays valid.
    Repeated pairs accumulate.
    """
    if num_edits < 1:
        raise ValueError("num_edits must be >= 1")
    if not 0 < weight_lo <= weight_hi:
        raise ValueError("need 0 < weight_lo <= weight_hi")
    if base.n < 2:
        raise ValueError("need at least two nodes to edit edges")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    base_lap = laplacian(base)
    laps = np.empty((K, base.n, base.n))
    for k in range(K):
        lap = base_lap.copy()
        for _ in range(num_edits):
            i, j = rng.choice(base.n, size=2, replace=False)
            w = rng.uniform(weight_lo, weight_hi)
            if allow_removal and rng.random() < 0.5:
                w = -min(w, -lap[i, j])
            _edge_update(lap, i, j, w)
        laps[k] = lap
    return ArmSet(laps)


def generate_diverse(n: int, K: int, family: str = "er", seed=None, **params) -> ArmSet:
    """``K`` independently sampled graphs of one family, each an arm."""
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    graphs = [make_graph(family, n, rng, warn=False, **params) for _ in range(K)]
    split = sum(g.num_components() > 1 for g in graphs)
    if split:
        log.info("%d of %d generated %s graphs are disconnected", split, K, family)
    return ArmSet.from_graphs(graphs)


def trace_inner(a, b) -> float:
    return float(np.sum(np.asarray(a) * np.asarray(b)))
