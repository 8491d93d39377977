"""Discrete structural entropy, tree oracles and dendrogram quality metrics.

All logarithms are base 2. Tree nodes whose cut is zero contribute nothing.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np

from .graph import WeightedGraph, conductance
from .trees import Dendrogram, PartitionTree, TreeError


def _check(G: WeightedGraph, T: PartitionTree) -> None:
    if G.n != T.num_leaves:
        raise TreeError(f"tree has {T.num_leaves} leaves but graph has {G.n} vertices")
    if G.total_volume <= 0:
        raise ValueError("graph has zero volume")


def node_volumes_and_cuts(G: WeightedGraph, T: PartitionTree) -> tuple[np.ndarray, np.ndarray]:
    """Volume ``V_alpha`` and cut ``g_alpha`` of every tree node."""
    M = T.membership
    vol = M.astype(float) @ G.degrees
    crossing = M[:, G.rows] != M[:, G.cols]
    cuts = crossing.astype(float) @ G.weights
    return vol, cuts


def structural_entropy(G: WeightedGraph, T: PartitionTree) -> float:
    """Sum over non-root nodes of ``-(g/V_G) log2(V_alpha / V_parent)``."""
    _check(G, T)
    vol, cuts = node_volumes_and_cuts(G, T)
    total = G.total_volume
    h = 0.0
    for v in range(T.num_nodes):
        p = T.parent[v]
        if p < 0 or cuts[v] == 0:
            continue
        h -= cuts[v] / total * math.log2(vol[v] / vol[p])
    return h


def one_dim_entropy(G: WeightedGraph) -> float:
    total = G.total_volume
    if total <= 0:
        raise ValueError("graph has zero volume")
    p = G.degrees[G.degrees > 0] / total
    return float(-(p * np.log2(p)).sum())


def _leaf_term(G: WeightedGraph) -> float:
    d = G.degrees[G.degrees > 0]
    return float((d * np.log2(d)).sum())


def _edge_lca_volumes(G: WeightedGraph, T: PartitionTree) -> np.ndarray:
    vol = T.membership.astype(float) @ G.degrees
    lcas = [lca(T, i, j) for i, j in zip(G.rows.tolist(), G.cols.tolist())]
    return vol[np.array(lcas, dtype=np.int64)] if lcas else np.zeros(0)


def structural_entropy_lca(G: WeightedGraph, T: PartitionTree) -> float:
    """SE through LCA volumes: ``(2/V) sum W log2 V_lca - (1/V) sum d log2 d``."""
    _check(G, T)
    total = G.total_volume
    first = 2.0 / total * float((G.weights * np.log2(_edge_lca_volumes(G, T))).sum())
    return first - _leaf_term(G) / total


def se_cost(G: WeightedGraph, T: PartitionTree) -> float:
    """Edge cost ``sum W_ij log2(V_i + V_j + sum_k V_k [k under lca(i,j)])``."""
    _check(G, T)
    M = T.membership
    d = G.degrees
    total = 0.0
    for i, j, w in G.edges():
        under = M[lca(T, i, j)].copy()
        under[[i, j]] = False
        total += w * math.log2(d[i] + d[j] + d[under].sum())
    return total


def lca(T: PartitionTree, i: int, j: int) -> int:
    n = T.num_leaves
    if not (0 <= i < n and 0 <= j < n):
        raise TreeError(f"invalid vertex pair ({i}, {j})")
    a, b = int(T.leaf_of[i]), int(T.leaf_of[j])
    depth = T.depth
    while depth[a] > depth[b]:
        a = int(T.parent[a])
    while depth[b] > depth[a]:
        b = int(T.parent[b])
    while a != b:
        a, b = int(T.parent[a]), int(T.parent[b])
    return a


# -- exhaustive optimal tree -------------------------------------------------

_MAX_ALL = 7
_MAX_BINARY = 9


def _set_partitions(items: tuple):
    if len(items) == 1:
        yield [items]
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [(first,) + part[k]] + part[k + 1:]
        yield [(first,)] + part


def _hierarchies(items: tuple, binary_only: bool):
    """All trees over ``items`` as nested tuples; children are proper blocks."""
    if len(items) == 1:
        yield items[0]
        return
    if binary_only:
        first, rest = items[0], items[1:]
        for r in range(len(rest)):
            for others in itertools.combinations(rest, r):
                left = (first,) + others
                right = tuple(x for x in rest if x not in others)
                for lt in _hierarchies(left, True):
                    for rt in _hierarchies(right, True):
                        yield (lt, rt)
        return
    for part in _set_partitions(items):
        if len(part) < 2:
            continue
        for combo in itertools.product(*(_hierarchies(b, False) for b in part)):
            yield tuple(combo)


def enumerate_trees(n: int, binary_only: bool = False):
    """Yield every partitioning tree over ``n`` leaves (no unary nodes) as nested tuples."""
    if n == 1:
        yield 0
        return
    yield from _hierarchies(tuple(range(n)), binary_only)


def _subset_tables(G: WeightedGraph):
    n = G.n
    size = 1 << n
    vol = np.zeros(size)
    cuts = np.zeros(size)
    A = G.dense()
    for v in range(n):
        lo = 1 << v
        bits = ((np.arange(lo)[:, None] >> np.arange(v)) & 1).astype(float)
        to_set = bits @ A[v, :v] if v else np.zeros(lo)
        vol[lo:2 * lo] = vol[:lo] + G.degrees[v]
        cuts[lo:2 * lo] = cuts[:lo] + G.degrees[v] - 2.0 * to_set
    return vol, cuts


def _nested_se(nested, vol, cuts, total) -> float:
    def walk(item):
        # returns (mask, entropy contributed by strict descendants)
        if not isinstance(item, tuple):
            return 1 << item, 0.0
        masks, h = [], 0.0
        for child in item:
            m, hc = walk(child)
            masks.append(m)
            h += hc
        mask = sum(masks)
        for m in masks:
            if cuts[m] > 0:
                h -= cuts[m] / total * math.log2(vol[m] / vol[mask])
        return mask, h

    return walk(nested)[1]


def min_se_bruteforce(G: WeightedGraph, binary_only: bool = False) -> tuple[PartitionTree, float]:
    """Enumerate every partitioning tree (or every binary one) and return the SE minimizer.

    Ties keep the first tree in enumeration order.
    """
    limit = _MAX_BINARY if binary_only else _MAX_ALL
    if G.n > limit:
        raise ValueError(f"exhaustive search limited to n <= {limit} (binary_only={binary_only})")
    if G.n < 2:
        raise ValueError("need at least two vertices")
    vol, cuts = _subset_tables(G)
    total = G.total_volume
    best, best_h = None, math.inf
    for nested in enumerate_trees(G.n, binary_only):
        h = _nested_se(nested, vol, cuts, total)
        if h < best_h - 1e-15:
            best, best_h = nested, h
    return PartitionTree.from_nested(best), best_h


def check_conductance_bound(G: WeightedGraph, T: PartitionTree) -> bool:
    """Whether normalized SE ``H^T / H^1`` is at least the graph conductance."""
    rho = structural_entropy(G, T) / one_dim_entropy(G)
    return rho >= conductance(G) - 1e-9


# -- evaluation metrics ------------------------------------------------------


def dendrogram_purity(T: Dendrogram, labels) -> float:
    """Mean LCA purity over all unordered same-label pairs.

    Exact: pairs whose LCA is merge node ``v`` are exactly those split between
    its two children, so each merge accounts for ``sum_c left_c * right_c`` pairs.
    """
    labels = np.asarray(labels)
    if labels.shape[0] != T.n:
        raise ValueError("one label per leaf required")
    classes, y = np.unique(labels, return_inverse=True)
    counts = np.zeros((2 * T.n - 1, classes.size))
    counts[np.arange(T.n), y] = 1.0
    class_sizes = counts[: T.n].sum(0)
    num_pairs = float((class_sizes * (class_sizes - 1) / 2).sum())
    if num_pairs == 0:
        raise ValueError("dendrogram purity is undefined without a same-label pair")
    acc = 0.0
    for t, (a, b) in enumerate(T.merges.tolist()):
        node = T.n + t
        counts[node] = counts[a] + counts[b]
        acc += float((counts[a] * counts[b] * counts[node]).sum()) / T.sizes[node]
    return acc / num_pairs


def dasgupta_cost(G: WeightedGraph, T: Dendrogram) -> float:
    """``sum_ij w_ij |leaves(lca(i, j))|``."""
    if G.n != T.n:
        raise TreeError("tree and graph sizes differ")
    tree = T.to_partition_tree()
    sizes = T.sizes
    return float(sum(w * sizes[lca(tree, i, j)] for i, j, w in G.edges()))


def label_counts(labels) -> Counter:
    return Counter(np.asarray(labels).tolist())


def dendrogram_scores(G: WeightedGraph, T: Dendrogram) -> tuple[float, float]:
    """``(structural entropy, Dasgupta cost)`` of a dendrogram in one pass over its merges.

    Edge weight joined at each merge is found by scanning the smaller
    cluster's adjacency (small-to-large), so the cost is ``O(m log n)``.
    """
    if G.n != T.n:
        raise TreeError("tree and graph sizes differ")
    total = G.total_volume
    if total <= 0:
        raise ValueError("graph has zero volume")
    n = T.n
    A = G.adjacency()
    owner = np.arange(n)
    members: list[list[int]] = [[i] for i in range(n)] + [[] for _ in range(n - 1)]
    vol = np.zeros(2 * n - 1)
    vol[:n] = G.degrees
    internal = np.zeros(2 * n - 1)
    parent = np.full(2 * n - 1, -1)
    sizes = T.sizes
    dasgupta = 0.0
    for t, (a, b) in enumerate(T.merges.tolist()):
        node = n + t
        small, large = (a, b) if len(members[a]) <= len(members[b]) else (b, a)
        joined = 0.0
        for u in members[small]:
            start, stop = A.indptr[u], A.indptr[u + 1]
            nbrs = A.indices[start:stop]
            joined += float(A.data[start:stop][owner[nbrs] == large].sum())
        owner[members[small]] = node
        owner[members[large]] = node
        members[node] = members[large] + members[small]
        members[small] = members[large] = []
        vol[node] = vol[a] + vol[b]
        internal[node] = internal[a] + internal[b] + joined
        parent[a] = parent[b] = node
        dasgupta += joined * sizes[node]
    cuts = vol - 2.0 * internal
    h = 0.0
    for v in range(2 * n - 2):
        if cuts[v] > 0:
            h -= cuts[v] / total * math.log2(vol[v] / vol[parent[v]])
    return h, dasgupta
