"""Friedkin-Johnsen dynamics and the polarization/disagreement objective."""

from __future__ import annotations

import numpy as np
import scipy.optimize

from . import kernels
from .errors import ConvergenceFailure, DimensionMismatch, MeanNotCentered
from .graph import WeightedGraph, laplacian
from .numerics import spd_solve

CENTER_TOL = 1e-9


def _check_dims(g: WeightedGraph, *vectors):
    for v in vectors:
        if v.shape != (g.n,):
            raise DimensionMismatch(f"vector of shape {v.shape} on graph with n={g.n}")


def fj_step(z, g: WeightedGraph, s) -> np.ndarray:
    """One synchronous update ``(D + I)^{-1} (A z + s)``."""
    z = np.asarray(z, dtype=float)
    s = np.asarray(s, dtype=float)
    _check_dims(g, z, s)
    indptr, indices, weights = g.csr()
    out = np.empty(g.n)
    kernels.fj_sweep(z, s, indptr, indices, weights, g.degree(), out)
    return out


def fj_equilibrium_iterative(g: WeightedGraph, s, tol: float = 1e-10, max_iter: int = 1_000_000):
    """Iterate :func:`fj_step` from ``z = s`` until the sup-norm change is below ``tol``.

    Returns ``(z, iterations)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = np.asarray(s, dtype=float)
    _check_dims(g, s)
    indptr, indices, weights = g.csr()
    degree = g.degree()
    z = s.copy()
    out = np.empty(g.n)
    for it in range(1, max_iter + 1):
        change = kernels.fj_sweep(z, s, indptr, indices, weights, degree, out)
        z, out = out, z
        if change <= tol:
            return z, it
    raise ConvergenceFailure(f"FJ iteration did not settle within {max_iter} steps")


def fj_equilibrium_closed(lap, s) -> np.ndarray:
    """``z* = (I + L)^{-1} s``."""
    lap = np.asarray(lap, dtype=float)
    s = np.asarray(s, dtype=float)
    if s.shape != (lap.shape[0],):
        raise DimensionMismatch(f"s has shape {s.shape}, L is {lap.shape}")
    return spd_solve(np.eye(lap.shape[0]) + lap, s)


def polarization(z) -> float:
    z = np.asarray(z, dtype=float)
    return float(np.sum((z - z.mean()) ** 2))


def disagreement(z, g: WeightedGraph) -> float:
    """Weighted squared differences across edges, equal to ``z^T L z``."""
    z = np.asarray(z, dtype=float)
    _check_dims(g, z)
    return float(np.sum(g.weight * (z[g.src] - z[g.dst]) ** 2))


def objective_f(s, lap) -> float:
    """Polarization plus disagreement at equilibrium: ``s^T (I + L)^{-1} s``."""
    s = np.asarray(s, dtype=float)
    if abs(s.mean()) > CENTER_TOL:
        raise MeanNotCentered(f"mean(s) = {s.mean():.3e}")
    return float(s @ fj_equilibrium_closed(lap, s))


def equilibrium_report(g: WeightedGraph, s) -> dict:
    """Equilibrium opinions and the three objective terms for one graph."""
    lap = laplacian(g)
    z = fj_equilibrium_closed(lap, s)
    return {
        "z": z,
        "polarization": polarization(z),
        "disagreement": disagreement(z, g),
        "objective": objective_f(s, lap),
    }


def polarize(raw) -> np.ndarray:
    """Push opinions toward the extremes: ``sign(x) |x|^(1/3)``."""
    raw = np.asarray(raw, dtype=float)
    return np.sign(raw) * np.abs(raw) ** (1.0 / 3.0)


def sample_opinions(n: int, mode: str = "uniform", seed=None) -> np.ndarray:
    """Mean-centred innate opinions in ``[-1, 1]``.

    Entries are i.i.d. uniform on ``[-1, 1]`` (optionally passed through
    :func:`polarize`) and then centred. If centring pushes an entry outside
    the interval, the vector is replaced by its Euclidean projection onto
    ``{mean 0} ∩ [-1, 1]^n``, i.e. ``clip(s - c)`` with the shift ``c``
    solved so the mean vanishes. A single clip-and-recentre pass can leave
    entries outside the box, this cannot.
    """
    if n < 2:
        raise ValueError("need at least two nodes")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    s = rng.uniform(-1.0, 1.0, size=n)
    if mode == "polarized":
        s = polarize(s)
    elif mode != "uniform":
        raise ValueError(f"unknown opinion mode {mode!r}")
    s = s - s.mean()
    if np.any(np.abs(s) > 1.0):
        raw = s

        def clipped_mean(c):
            return float(np.clip(raw - c, -1.0, 1.0).mean())

        c = scipy.optimize.brentq(clipped_mean, -2.0, 2.0, xtol=1e-15)
        s = np.clip(raw - c, -1.0, 1.0)
        inside = np.abs(s) < 1.0
        # absorb the bisection residue into the unclipped entries
        s[inside] -= s.sum() / inside.sum()
    return s
