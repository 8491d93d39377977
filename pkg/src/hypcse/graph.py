"""Weighted similarity graphs: construction, volumes, cuts, conductance, sampling."""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph with positive edge weights and optional vertex features.

    Edges are stored once with ``rows[e] < cols[e]``. ``ids`` maps local vertex
    indices back to a parent graph when the graph is an induced subgraph.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    features: np.ndarray | None = None
    ids: np.ndarray | None = None
    degrees: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if not (rows.shape == cols.shape == weights.shape):
            raise GraphError("rows, cols and weights must have equal length")
        if rows.size:
            if (rows >= cols).any():
                raise GraphError("edges must satisfy i < j (no self-loops)")
            if rows.min() < 0 or cols.max() >= self.n:
                raise GraphError("edge endpoint out of range")
            if (weights <= 0).any():
                raise GraphError("edge weights must be positive")
            keys = rows * self.n + cols
            if np.unique(keys).size != keys.size:
                raise GraphError("duplicate edges")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "weights", weights)
        deg = np.zeros(self.n)
        np.add.at(deg, rows, weights)
        np.add.at(deg, cols, weights)
        object.__setattr__(self, "degrees", deg)

    @classmethod
    def from_edges(cls, n, edges, features=None, ids=None) -> "WeightedGraph":
        """Build from ``(i, j, w)`` triples; endpoint order does not matter."""
        edges = list(edges)
        if not edges:
            return cls(n, np.zeros(0, int), np.zeros(0, int), np.zeros(0), features, ids)
        i, j, w = (np.array(c) for c in zip(*edges))
        return cls(n, np.minimum(i, j), np.maximum(i, j), w.astype(float), features, ids)

    @classmethod
    def from_dense(cls, W, features=None) -> "WeightedGraph":
        W = np.asarray(W, dtype=float)
        i, j = np.nonzero(np.triu(W, 1))
        return cls(W.shape[0], i, j, W[i, j], features)

    @property
    def num_edges(self) -> int:
        return int(self.rows.size)

    @property
    def total_volume(self) -> float:
        return float(self.degrees.sum())

    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist()))

    def edge_keys(self) -> np.ndarray:
        return self.rows * self.n + self.cols

    def adjacency(self) -> sp.csr_matrix:
        A = sp.coo_matrix((self.weights, (self.rows, self.cols)), shape=(self.n, self.n))
        return (A + A.T).tocsr()

    def dense(self) -> np.ndarray:
        return self.adjacency().toarray()

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        return connected_components(self.adjacency(), directed=False)[0] == 1

    def with_edges(self, rows, cols, weights) -> "WeightedGraph":
        return WeightedGraph(self.n, rows, cols, weights, self.features, self.ids)

    def induced_subgraph(self, vertices) -> "WeightedGraph":
        vertices = np.asarray(vertices, dtype=np.int64)
        local = np.full(self.n, -1)
        local[vertices] = np.arange(vertices.size)
        keep = (local[self.rows] >= 0) & (local[self.cols] >= 0)
        a, b = local[self.rows[keep]], local[self.cols[keep]]
        feats = None if self.features is None else self.features[vertices]
        parent_ids = vertices if self.ids is None else self.ids[vertices]
        return WeightedGraph(vertices.size, np.minimum(a, b), np.maximum(a, b),
                             self.weights[keep], feats, parent_ids)


def _as_mask(G: WeightedGraph, S) -> np.ndarray:
    S = np.asarray(S)
    if S.dtype == bool:
        if S.shape != (G.n,):
            raise GraphError("boolean subset must have length n")
        return S
    mask = np.zeros(G.n, dtype=bool)
    if S.size:
        if S.min() < 0 or S.max() >= G.n:
            raise GraphError("vertex index out of range")
        mask[S.astype(np.int64)] = True
    return mask


def volume(G: WeightedGraph, S) -> float:
    return float(G.degrees[_as_mask(G, S)].sum())


def cut(G: WeightedGraph, S) -> float:
    mask = _as_mask(G, S)
    crossing = mask[G.rows] != mask[G.cols]
    return float(G.weights[crossing].sum())


def standardize(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    return (X - X.mean(axis=0)) / std


def build_knn_graph(X, k: int = 10, sigma: float = 1.0, standardize_features: bool = True,
                    block: int = 1024) -> WeightedGraph:
    """Gaussian-kernel kNN graph, symmetrized by union.

    ``w_ij = exp(-|x_i - x_j|^2 / (2 sigma^2))``. Each vertex keeps its ``k``
    heaviest incident edges, ties going to the lower vertex index. The stored
    features are the raw (unstandardized) rows.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise GraphError("need at least two points")
    if k < 1:
        raise GraphError("k must be positive")
    Y = standardize(X) if standardize_features else X
    k = min(k, n - 1)
    sq = (Y * Y).sum(1)
    src, dst, dist = [], [], []
    for start in range(0, n, block):
        stop = min(start + block, n)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * Y[start:stop] @ Y.T
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        src.append(np.repeat(np.arange(start, stop), k))
        dst.append(order.ravel())
        dist.append(np.take_along_axis(d2, order, axis=1).ravel())
    src, dst, dist = np.concatenate(src), np.concatenate(dst), np.concatenate(dist)
    i, j = np.minimum(src, dst), np.maximum(src, dst)
    keys, first = np.unique(i * n + j, return_index=True)
    w = np.exp(-dist[first] / (2.0 * sigma**2))
    keep = w > 0
    if not keep.all():
        warnings.warn(f"{(~keep).sum()} kNN edges underflowed to zero weight and were dropped")
    return WeightedGraph(n, keys[keep] // n, keys[keep] % n, w[keep], X)


def conductance(G: WeightedGraph) -> float:
    """Exhaustive conductance ``min_S cut(S) / min(vol S, vol V\\S)`` for n <= 20."""
    n = G.n
    if n > 20:
        raise GraphError("exhaustive conductance is limited to n <= 20")
    if n < 2:
        raise GraphError("conductance needs at least two vertices")
    if not G.is_connected():
        warnings.warn("graph is disconnected; conductance is 0")
        return 0.0
    A = G.dense()
    d = G.degrees
    size = 1 << n
    vol = np.zeros(size)
    cuts = np.zeros(size)
    for v in range(n):
        lo = 1 << v
        prev = np.arange(lo)
        bits = ((prev[:, None] >> np.arange(v)) & 1).astype(float)
        to_set = bits @ A[v, :v] if v else np.zeros(lo)
        vol[lo:2 * lo] = vol[:lo] + d[v]
        cuts[lo:2 * lo] = cuts[:lo] + d[v] - 2.0 * to_set
    total = d.sum()
    inner = slice(1, size - 1)
    denom = np.minimum(vol[inner], total - vol[inner])
    return float(np.min(cuts[inner] / denom))


def _bfs_order(G: WeightedGraph) -> list[list[int]]:
    """Neighbor lists sorted by decreasing weight, then index."""
    A = G.adjacency()
    out = []
    for v in range(G.n):
        start, stop = A.indptr[v], A.indptr[v + 1]
        nbrs, w = A.indices[start:stop], A.data[start:stop]
        order = np.lexsort((nbrs, -w))
        out.append(nbrs[order].tolist())
    return out


def subgraph_sample(G: WeightedGraph, n_prime: int, n_seed: int,
                    rng_seed: int | np.random.Generator) -> list[WeightedGraph]:
    """Neighborhood-preserving sampling of ``floor(n / n')`` disjoint induced subgraphs.

    Each subgraph starts from ``n_seed`` random unused vertices and grows
    breadth-first through unused neighbors until it has ``n_prime`` vertices.
    A frontier that runs dry is reseeded from the unused pool.
    """
    if not 1 <= n_seed <= n_prime:
        raise GraphError("require 1 <= n_seed <= n_prime")
    if n_prime >= G.n:
        return [G.induced_subgraph(np.arange(G.n))]
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    nbrs = _bfs_order(G)
    used = np.zeros(G.n, dtype=bool)
    samples = []
    for _ in range(G.n // n_prime):
        chosen: list[int] = []
        queue: deque[int] = deque()

        def take(v):
            used[v] = True
            chosen.append(v)
            queue.append(v)

        pool = np.flatnonzero(~used)
        for v in rng.choice(pool, size=min(n_seed, n_prime), replace=False):
            take(int(v))
        while len(chosen) < n_prime:
            if not queue:
                pool = np.flatnonzero(~used)
                take(int(rng.choice(pool)))
                continue
            u = queue.popleft()
            for v in nbrs[u]:
                if len(chosen) >= n_prime:
                    break
                if not used[v]:
                    take(v)
        samples.append(G.induced_subgraph(np.sort(np.array(chosen))))
    return samples
