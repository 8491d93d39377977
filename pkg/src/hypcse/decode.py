"""Dendrogram decoding from Poincare embeddings.

Closeness between clusters is the largest geodesic-to-origin value over
cross pairs: a deeper lowest common ancestor means a closer pair. Ties are
broken by the lexicographically smallest ``(min index, max index)`` point pair.
"""

from __future__ import annotations

import warnings

import numpy as np
import torch
from scipy.spatial import cKDTree

from . import manifold
from .trees import Dendrogram

RHO_MAX = 0.999


def normalize_to_boundary(Z, rho_max: float = RHO_MAX) -> np.ndarray:
    """Rescale every point to Euclidean norm ``rho_max``.

    A zero point gets a pseudo-random direction seeded by its row index.
    """
    if not 0.0 < rho_max < 1.0:
        raise ValueError("rho_max must lie in (0, 1)")
    Z = np.array(Z, dtype=float)
    norms = np.linalg.norm(Z, axis=1)
    for i in np.flatnonzero(norms == 0):
        warnings.warn(f"point {i} is at the origin; assigning a seeded direction")
        Z[i] = np.random.default_rng(int(i)).standard_normal(Z.shape[1])
        norms[i] = np.linalg.norm(Z[i])
    return Z * (rho_max / norms)[:, None]


def _lorentz_parts(Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spatial and time coordinates of the hyperboloid points matching Poincare rows ``Z``."""
    sq = (Z * Z).sum(1)
    return 2.0 * Z / (1.0 - sq)[:, None], (1.0 + sq) / (1.0 - sq)


def _values(V, W, time_i, time_j, dots) -> np.ndarray:
    args = [torch.as_tensor(np.array(v, dtype=float)) for v in (V, W, dots, time_i, time_j)]
    return manifold.lca_depth_from_lorentz_gram(*args).numpy()


def closeness_matrix(Z) -> np.ndarray:
    """Pairwise geodesic-to-origin values; the diagonal is set to ``-inf``.

    Each value is computed once with ``i < j`` argument order and mirrored,
    so the matrix is exactly symmetric.
    """
    space, time = _lorentz_parts(np.asarray(Z, dtype=float))
    sq = (space * space).sum(1)
    S = _values(sq[:, None], sq[None, :], time[:, None], time[None, :], space @ space.T)
    i, j = np.tril_indices(Z.shape[0], -1)
    S[i, j] = S[j, i]
    np.fill_diagonal(S, -np.inf)
    return S


def closeness(A, B, Z) -> float:
    A, B = list(A), list(B)
    if not A or not B:
        raise ValueError("clusters must be nonempty")
    if set(A) & set(B):
        raise ValueError("clusters must be disjoint")
    space, time = _lorentz_parts(np.asarray(Z, dtype=float))
    sa, sb = space[A], space[B]
    vals = _values((sa * sa).sum(1)[:, None], (sb * sb).sum(1)[None, :],
                   time[A][:, None], time[B][None, :], sa @ sb.T)
    return float(vals.max())


def _merge_log(n: int, pairs) -> list[tuple[int, int]]:
    """Cluster merges produced by applying point-pair links in order through a union-find."""
    parent = list(range(n))
    cluster = list(range(n))

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    merges = []
    for i, j in pairs:
        ri, rj = find(i), find(j)
        if ri == rj:
            continue
        a, b = sorted((cluster[ri], cluster[rj]))
        parent[rj] = ri
        cluster[ri] = n + len(merges)
        merges.append((a, b))
        if len(merges) == n - 1:
            break
    return merges


def _build(n: int, pairs) -> Dendrogram:
    return Dendrogram(n, np.array(_merge_log(n, pairs), dtype=np.int64).reshape(-1, 2))


def decode_tree_naive(Z, rho_max: float = RHO_MAX, normalize: bool = True) -> Dendrogram:
    """Agglomerate the closest pair of clusters until two remain, then join them at the root."""
    Z = normalize_to_boundary(Z, rho_max) if normalize else np.asarray(Z, dtype=float)
    n = Z.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    C = closeness_matrix(Z)
    # witness point pair per cluster pair, encoded as min * n + max
    idx = np.arange(n)
    W = np.minimum(idx[:, None], idx[None, :]) * n + np.maximum(idx[:, None], idx[None, :])
    alive = np.ones(n, dtype=bool)
    pairs = []
    for _ in range(n - 1):
        live = np.flatnonzero(alive)
        sub, wit = C[np.ix_(live, live)], W[np.ix_(live, live)]
        best = sub.max()
        cand = np.argwhere(sub == best)
        cand = cand[cand[:, 0] < cand[:, 1]]
        k = np.argmin(wit[cand[:, 0], cand[:, 1]])
        u, v = live[cand[k, 0]], live[cand[k, 1]]
        w = int(W[u, v])
        pairs.append((w // n, w % n))
        # single linkage update: keep the larger value, smaller witness on ties
        better = (C[v] > C[u]) | ((C[v] == C[u]) & (W[v] < W[u]))
        C[u] = np.where(better, C[v], C[u])
        W[u] = np.where(better, W[v], W[u])
        C[:, u], W[:, u] = C[u], W[u]
        C[u, u] = -np.inf
        alive[v] = False
        C[v, :] = C[:, v] = -np.inf
    return _build(n, pairs)


def knn_closeness_edges(Z, K: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Union of each point's ``K`` closest neighbors.

    For points of equal norm the closeness value increases with the dot
    product, so neighbors under closeness are Euclidean nearest neighbors.
    """
    n = Z.shape[0]
    K = min(K, n - 1)
    _, nbr = cKDTree(Z).query(Z, k=K + 1)
    nbr = np.asarray(nbr).reshape(n, K + 1)
    src = np.repeat(np.arange(n), K + 1)
    dst = nbr.ravel()
    ok = src != dst
    keys = np.unique(np.minimum(src[ok], dst[ok]) * n + np.maximum(src[ok], dst[ok]))
    i, j = keys // n, keys % n
    space, time = _lorentz_parts(Z)
    sq = (space * space).sum(1)
    vals = _values(sq[i], sq[j], time[i], time[j], (space[i] * space[j]).sum(1))
    return i, j, vals


def _kruskal_order(i, j, vals) -> list[tuple[int, int]]:
    order = np.lexsort((j, i, -vals))
    return list(zip(i[order].tolist(), j[order].tolist()))


def decode_tree_fast(Z, K: int = 10, rho_max: float = RHO_MAX, normalize: bool = True) -> Dendrogram:
    """Single linkage through Kruskal's algorithm on a ``K``-nearest-neighbor closeness graph."""
    if K < 1:
        raise ValueError("K must be positive")
    Z = normalize_to_boundary(Z, rho_max) if normalize else np.asarray(Z, dtype=float)
    n = Z.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    edges = _kruskal_order(*knn_closeness_edges(Z, K))
    merges = _merge_log(n, edges)
    if len(merges) == n - 1:
        return Dendrogram(n, np.array(merges, dtype=np.int64))
    warnings.warn("kNN closeness graph is disconnected; adding cross-component edges")
    i, j = np.triu_indices(n, 1)
    vals = closeness_matrix(Z)[i, j]
    return _build(n, edges + _kruskal_order(i, j, vals))
