"""Partitioning trees, binary dendrograms and their text serializations."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class TreeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PartitionTree:
    """Rooted tree whose leaves are graph vertices.

    ``parent[v]`` is the parent node id of node ``v`` (``-1`` for the root);
    ``leaf_of[i]`` is the node holding vertex ``i``.
    """

    parent: np.ndarray
    leaf_of: np.ndarray

    def __post_init__(self):
        parent = np.asarray(self.parent, dtype=np.int64)
        leaf_of = np.asarray(self.leaf_of, dtype=np.int64)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "leaf_of", leaf_of)
        roots = np.flatnonzero(parent < 0)
        if roots.size != 1:
            raise TreeError(f"expected exactly one root, found {roots.size}")
        if np.unique(leaf_of).size != leaf_of.size:
            raise TreeError("two vertices share a leaf")
        has_child = np.zeros(parent.size, dtype=bool)
        has_child[parent[parent >= 0]] = True
        if has_child[leaf_of].any():
            raise TreeError("leaf nodes must not have children")
        if (~has_child).sum() != leaf_of.size:
            raise TreeError("every childless node must hold a vertex")
        # every node must reach the root
        depth = self.depth
        if (depth < 0).any():
            raise TreeError("parent pointers contain a cycle")

    @property
    def num_nodes(self) -> int:
        return int(self.parent.size)

    @property
    def num_leaves(self) -> int:
        return int(self.leaf_of.size)

    @cached_property
    def root(self) -> int:
        return int(np.flatnonzero(self.parent < 0)[0])

    @cached_property
    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for v, p in enumerate(self.parent.tolist()):
            if p >= 0:
                kids[p].append(v)
        return kids

    @cached_property
    def order(self) -> list[int]:
        """Nodes in breadth-first order from the root (parents before children)."""
        out, frontier = [], [self.root]
        while frontier:
            out.extend(frontier)
            frontier = [c for v in frontier for c in self.children[v]]
        return out

    @cached_property
    def depth(self) -> np.ndarray:
        depth = np.full(self.num_nodes, -1)
        depth[self.root] = 0
        seen = 0
        frontier = [self.root]
        while frontier:
            seen += len(frontier)
            nxt = []
            for v in frontier:
                for c in self.children[v]:
                    depth[c] = depth[v] + 1
                    nxt.append(c)
            frontier = nxt
            if seen > self.num_nodes:
                break
        return depth

    @cached_property
    def membership(self) -> np.ndarray:
        """Boolean ``(num_nodes, n)`` matrix: vertex ``i`` lies under node ``v``."""
        M = np.zeros((self.num_nodes, self.num_leaves), dtype=bool)
        M[self.leaf_of, np.arange(self.num_leaves)] = True
        for v in reversed(self.order):
            p = self.parent[v]
            if p >= 0:
                M[p] |= M[v]
        return M

    def vertex_set(self, node: int) -> np.ndarray:
        return np.flatnonzero(self.membership[node])

    def ancestors(self, node: int) -> list[int]:
        """Chain from ``node`` up to and including the root."""
        chain = [node]
        while self.parent[chain[-1]] >= 0:
            chain.append(int(self.parent[chain[-1]]))
        return chain

    def is_binary(self) -> bool:
        return all(len(c) in (0, 2) for c in self.children)

    # -- constructors ------------------------------------------------------

    @classmethod
    def flat(cls, n: int) -> "PartitionTree":
        return cls(np.r_[np.full(n, n), -1], np.arange(n))

    @classmethod
    def from_nested(cls, nested) -> "PartitionTree":
        """Build from nested tuples/lists of vertex ids, e.g. ``((0, 1), 2)``."""
        parent: list[int] = []
        leaves: dict[int, int] = {}

        def visit(item, par):
            node = len(parent)
            parent.append(par)
            if isinstance(item, (tuple, list)):
                if len(item) == 0:
                    raise TreeError("empty cluster")
                for child in item:
                    visit(child, node)
            else:
                if int(item) in leaves:
                    raise TreeError(f"vertex {item} appears twice")
                leaves[int(item)] = node

        visit(nested, -1)
        n = len(leaves)
        if sorted(leaves) != list(range(n)):
            raise TreeError("leaf labels must be exactly 0..n-1")
        return cls(np.array(parent), np.array([leaves[i] for i in range(n)]))

    def to_nested(self):
        def build(v):
            kids = self.children[v]
            if not kids:
                return int(np.flatnonzero(self.leaf_of == v)[0])
            return tuple(build(c) for c in kids)
        return build(self.root)


@dataclass(frozen=True, eq=False)
class Dendrogram:
    """Binary tree stored as ``n - 1`` merges; merge ``t`` creates cluster ``n + t``.

    Ids ``0..n-1`` are leaves (vertex ``i`` is leaf ``i``); the last merge is the root.
    """

    n: int
    merges: np.ndarray

    def __post_init__(self):
        merges = np.asarray(self.merges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "merges", merges)
        if self.n < 2:
            raise TreeError("a dendrogram needs at least two leaves")
        if merges.shape[0] != self.n - 1:
            raise TreeError(f"expected {self.n - 1} merges, got {merges.shape[0]}")
        used = np.zeros(2 * self.n - 1, dtype=bool)
        for t, (a, b) in enumerate(merges.tolist()):
            if a == b or not (0 <= a < self.n + t and 0 <= b < self.n + t):
                raise TreeError(f"merge {t} references an unavailable cluster")
            if used[a] or used[b]:
                raise TreeError(f"merge {t} reuses a cluster")
            used[a] = used[b] = True

    @cached_property
    def sizes(self) -> np.ndarray:
        size = np.ones(2 * self.n - 1, dtype=np.int64)
        for t, (a, b) in enumerate(self.merges.tolist()):
            size[self.n + t] = size[a] + size[b]
        return size

    def to_partition_tree(self) -> PartitionTree:
        parent = np.full(2 * self.n - 1, -1)
        for t, (a, b) in enumerate(self.merges.tolist()):
            parent[a] = parent[b] = self.n + t
        return PartitionTree(parent, np.arange(self.n))

    @classmethod
    def from_partition_tree(cls, tree: PartitionTree) -> "Dendrogram":
        if not tree.is_binary():
            raise TreeError("tree is not binary")
        n = tree.num_leaves
        ids = np.full(tree.num_nodes, -1)
        ids[tree.leaf_of] = np.arange(n)
        merges = []
        for v in reversed(tree.order):
            kids = tree.children[v]
            if kids:
                merges.append((ids[kids[0]], ids[kids[1]]))
                ids[v] = n + len(merges) - 1
        return cls(n, np.array(merges))

    def structure(self) -> frozenset:
        """Canonical set of clusters (as frozensets of leaves); equal iff same tree."""
        members: list[frozenset] = [frozenset([i]) for i in range(self.n)]
        for a, b in self.merges.tolist():
            members.append(members[a] | members[b])
        return frozenset(members[self.n:])

    # -- serialization ------------------------------------------------------

    def to_newick(self, names=None) -> str:
        names = [str(i) for i in range(self.n)] if names is None else [str(x) for x in names]
        text: list[str] = list(names)
        for a, b in self.merges.tolist():
            text.append(f"({text[a]},{text[b]})")
        return text[-1] + ";"

    def merges_json(self) -> str:
        rows = [[int(a), int(b), self.n + t] for t, (a, b) in enumerate(self.merges.tolist())]
        return json.dumps(rows)

    @classmethod
    def from_merges_json(cls, text: str) -> "Dendrogram":
        rows = json.loads(text)
        return cls(len(rows) + 1, np.array([[a, b] for a, b, _ in rows]).reshape(-1, 2))


def parse_newick(text: str, names=None):
    """Parse a Newick string into a :class:`PartitionTree`.

    Leaf labels are looked up in ``names`` when given, otherwise they must be
    integers. Branch lengths are ignored. Returns ``(tree, labels)`` where
    ``labels[i]`` is the original leaf label of vertex ``i``.
    """
    text = text.strip()
    if text.endswith(";"):
        text = text[:-1]
    pos = 0
    index = None if names is None else {str(x): i for i, x in enumerate(names)}
    labels: dict[int, str] = {}

    def read_label():
        nonlocal pos
        start = pos
        while pos < len(text) and text[pos] not in ",();":
            pos += 1
        return text[start:pos].split(":")[0].strip()

    def node():
        nonlocal pos
        if pos < len(text) and text[pos] == "(":
            pos += 1
            kids = [node()]
            while pos < len(text) and text[pos] == ",":
                pos += 1
                kids.append(node())
            if pos >= len(text) or text[pos] != ")":
                raise TreeError(f"expected ')' at position {pos}")
            pos += 1
            read_label()
            return tuple(kids)
        label = read_label()
        if not label:
            raise TreeError(f"empty leaf label at position {pos}")
        vid = index[label] if index is not None else int(label)
        labels[vid] = label
        return vid

    nested = node()
    if pos != len(text):
        raise TreeError(f"trailing characters at position {pos}")
    tree = PartitionTree.from_nested(nested)
    return tree, [labels[i] for i in range(tree.num_leaves)]
