"""Undirected weighted graphs: generators, edge-list ingestion, Laplacians."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

from .errors import EmptyGraph, ParseError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Canonical undirected graph: edges stored once with ``i < j``, weights > 0."""

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    labels: tuple = field(default=(), compare=False)

    def __post_init__(self):
        src = np.asarray(self.src, dtype=np.int64)
        dst = np.asarray(self.dst, dtype=np.int64)
        weight = np.asarray(self.weight, dtype=float)
        if not (src.shape == dst.shape == weight.shape):
            raise ValueError("edge arrays must have equal length")
        if src.size and (np.any(src >= dst) or src.min() < 0 or dst.max() >= self.n):
            raise ValueError("edges must satisfy 0 <= i < j < n")
        if np.any(weight <= 0):
            raise ValueError("edge weights must be strictly positive")
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "weight", weight)

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.src, other.src)
                and np.array_equal(self.dst, other.dst)
                and np.array_equal(self.weight, other.weight))

    __hash__ = None

    @classmethod
    def from_edges(cls, n, edges, labels=()):
        """Build from ``(i, j, w)`` triples, canonicalising orientation."""
        if not edges:
            return cls(n, np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0), labels)
        arr = np.array([(min(i, j), max(i, j), w) for i, j, w in edges], dtype=float)
        return cls(n, arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2], labels)

    @property
    def num_edges(self) -> int:
        return int(self.src.size)

    @property
    def edges(self):
        return list(zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist()))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        np.add.at(a, (self.src, self.dst), self.weight)
        return a + a.T

    def degree(self) -> np.ndarray:
        d = np.zeros(self.n)
        np.add.at(d, self.src, self.weight)
        np.add.at(d, self.dst, self.weight)
        return d

    def csr(self):
        """Symmetric CSR adjacency as ``(indptr, indices, weights)`` int64/float arrays."""
        rows = np.concatenate([self.src, self.dst])
        cols = np.concatenate([self.dst, self.src])
        vals = np.concatenate([self.weight, self.weight])
        m = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))
        m.sum_duplicates()
        m.sort_indices()
        return (
            m.indptr.astype(np.int64),
            m.indices.astype(np.int64),
            m.data.astype(float),
        )

    def num_components(self) -> int:
        rows = np.concatenate([self.src, self.dst])
        cols = np.concatenate([self.dst, self.src])
        m = scipy.sparse.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(self.n, self.n))
        return int(scipy.sparse.csgraph.connected_components(m, directed=False)[0])


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _upper_pairs(n):
    return np.triu_indices(n, 1)


def erdos_renyi(n: int, p: float, seed=None) -> WeightedGraph:
    """G(n, p) with unit weights."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = _rng(seed)
    i, j = _upper_pairs(n)
    keep = rng.random(i.size) < p
    return WeightedGraph(n, i[keep], j[keep], np.ones(int(keep.sum())))


def sbm_two_community(n: int, frac1: float, p_in: float, p_out: float, seed=None) -> WeightedGraph:
    """Two-block SBM; the first ``round(frac1 * n)`` nodes form community 1."""
    if not 0.0 < frac1 < 1.0:
        raise ValueError("frac1 must lie in (0, 1)")
    rng = _rng(seed)
    n1 = int(round(frac1 * n))
    i, j = _upper_pairs(n)
    same = (i < n1) == (j < n1)
    prob = np.where(same, p_in, p_out)
    keep = rng.random(i.size) < prob
    return WeightedGraph(n, i[keep], j[keep], np.ones(int(keep.sum())))


def community_sizes(n: int, frac1: float) -> tuple[int, int]:
    n1 = int(round(frac1 * n))
    return n1, n - n1


def laplacian(g: WeightedGraph) -> np.ndarray:
    """Dense ``L = D - A``."""
    lap = -g.adjacency()
    lap[np.diag_indices(g.n)] = g.degree()
    return lap


def load_edge_list(path) -> WeightedGraph:
    """Read a whitespace-separated ``src dst [weight]`` edge list.

    Node ids are arbitrary tokens, re-indexed densely in order of first
    appearance. Lines starting with ``#`` are comments. Self-loops are
    skipped and repeated undirected edges keep their first weight; both emit
    a warning.
    """
    index: dict[str, int] = {}
    seen: dict[tuple[int, int], float] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 'src dst [weight]', got {raw!r}", lineno)
        try:
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ParseError(f"bad weight {parts[2]!r}", lineno) from None
        if not np.isfinite(w) or w <= 0:
            raise ParseError(f"weight must be positive, got {w}", lineno)
        a = index.setdefault(parts[0], len(index))
        b = index.setdefault(parts[1], len(index))
        if a == b:
            log.warning("line %d: self-loop on %r skipped", lineno, parts[0])
            continue
        key = (min(a, b), max(a, b))
        if key in seen:
            log.warning("line %d: duplicate edge %s-%s ignored", lineno, parts[0], parts[1])
            continue
        seen[key] = w
    if not index:
        raise EmptyGraph(f"{path}: no nodes")
    labels = tuple(sorted(index, key=index.get))
    return WeightedGraph.from_edges(len(index), [(i, j, w) for (i, j), w in seen.items()], labels)


def make_graph(family: str, n: int, seed=None, *, p: float = 0.2, frac1: float = 0.75,
               p_in: float = 0.5, p_out: float = 0.07, warn: bool = True) -> WeightedGraph:
    """Generate a base graph by family name (``er`` or ``sbm``)."""
    if family == "er":
        g = erdos_renyi(n, p, seed)
    elif family == "sbm":
        g = sbm_two_community(n, frac1, p_in, p_out, seed)
    else:
        raise ValueError(f"unknown graph family {family!r}")
    if warn and g.n > 1 and g.num_components() > 1:
        log.warning("generated %s graph (n=%d) is disconnected", family, n)
    return g


BUNDLED = ("karate", "florentine", "davis", "lesmis")


def bundled_graph(name: str) -> WeightedGraph:
    """One of the small benchmark social networks shipped with the package.

    ``davis`` is the raw bipartite women/event affiliation graph, not a
    projection.
    """
    if name not in BUNDLED:
        raise ValueError(f"unknown bundled graph {name!r}; choose from {BUNDLED}")
    return load_edge_list(Path(__file__).parent / "data" / f"{name}.txt")
