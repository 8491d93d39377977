"""Continuous structural entropy and the auxiliary training losses."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import torch

from . import manifold
from .graph import WeightedGraph
from .trees import PartitionTree
from .entropy import lca


@dataclass(frozen=True)
class CseConfig:
    t1: float = 1000.0
    r1: float = 2.0
    t2: float = 1.0
    r2: float = 0.0
    eta1: float = 1.0
    eta2: float = 1.0

    def __post_init__(self):
        if self.t1 <= 0 or self.t2 <= 0:
            raise ValueError("temperatures must be positive")
        if self.eta1 < 0 or self.eta2 < 0:
            raise ValueError("loss weights must be nonnegative")


@dataclass
class EmbeddingSet:
    """Lorentz embeddings (rows on the hyperboloid) plus fixed leaf volumes."""

    lorentz: torch.Tensor
    leaf_volumes: torch.Tensor

    @property
    def poincare(self) -> torch.Tensor:
        return manifold.to_poincare(self.lorentz)

    @classmethod
    def from_poincare(cls, points, leaf_volumes) -> "EmbeddingSet":
        z = torch.as_tensor(np.asarray(points, dtype=float)) if not torch.is_tensor(points) else points
        sq = (z * z).sum(-1, keepdim=True)
        lorentz = torch.cat([1.0 + sq, 2.0 * z], dim=-1) / (1.0 - sq)
        return cls(lorentz, torch.as_tensor(leaf_volumes, dtype=z.dtype))


def leaves_at_radius(lorentz: torch.Tensor, radius: float, eps: float = 1e-15) -> torch.Tensor:
    """Rescale the Poincare images of hyperboloid points to a common Euclidean norm; returns hyperboloid points.

    Directions are kept and the map is differentiable away from the origin.
    """
    u = manifold.to_poincare(lorentz)
    u = radius * u / torch.sqrt((u * u).sum(-1, keepdim=True) + eps)
    sq = (u * u).sum(-1, keepdim=True)
    return torch.cat([1.0 + sq, 2.0 * u], dim=-1) / (1.0 - sq)


def _third_party_weights(d_ij, d_ik, d_jk, t1, r1):
    """First softmax component of ``(s_ij, s_ik, s_jk) / t1`` with ``s = r1 - depth``."""
    scores = torch.stack([r1 - d_ij.expand_as(d_ik), r1 - d_ik, r1 - d_jk], dim=-1) / t1
    return torch.softmax(scores, dim=-1)[..., 0]


def soft_lca_volumes(rows, cols, depth: torch.Tensor, volumes: torch.Tensor,
                     cfg: CseConfig, chunk: int = 4096) -> torch.Tensor:
    """Relaxed LCA volume (excluding the two endpoints) for each pair ``(rows[e], cols[e])``."""
    rows = torch.as_tensor(rows, dtype=torch.long)
    cols = torch.as_tensor(cols, dtype=torch.long)
    n = depth.shape[0]
    out = []
    for start in range(0, rows.numel(), chunk):
        r, c = rows[start:start + chunk], cols[start:start + chunk]
        p = _third_party_weights(depth[r, c].unsqueeze(1), depth[r], depth[c], cfg.t1, cfg.r1)
        mask = torch.ones(r.numel(), n, dtype=depth.dtype)
        mask[torch.arange(r.numel()), r] = 0.0
        mask[torch.arange(r.numel()), c] = 0.0
        out.append((p * mask) @ volumes)
    if not out:
        return depth.new_zeros(0)
    return torch.cat(out)


def soft_lca_volume(i: int, j: int, Z: EmbeddingSet, cfg: CseConfig) -> torch.Tensor:
    if i == j:
        raise ValueError("soft LCA volume needs two distinct vertices")
    depth = manifold.pairwise_lca_depth_lorentz(Z.lorentz)
    return soft_lca_volumes([i], [j], depth, Z.leaf_volumes, cfg)[0]


def cse_loss(G: WeightedGraph, Z: EmbeddingSet, cfg: CseConfig) -> torch.Tensor:
    """``sum_(i,j) W_ij log2(V_i + V_j + soft LCA volume)`` with the argument clamped at 1."""
    if Z.lorentz.shape[0] != G.n:
        raise ValueError("embedding count does not match the graph")
    if G.num_edges == 0:
        warnings.warn("cse_loss on an edgeless graph is 0")
        return Z.lorentz.sum() * 0.0
    depth = manifold.pairwise_lca_depth_lorentz(Z.lorentz)
    vols = Z.leaf_volumes
    soft = soft_lca_volumes(G.rows, G.cols, depth, vols, cfg)
    rows, cols = torch.as_tensor(G.rows), torch.as_tensor(G.cols)
    arg = torch.clamp(vols[rows] + vols[cols] + soft, min=1.0)
    w = torch.as_tensor(G.weights, dtype=depth.dtype)
    return (w * torch.log2(arg)).sum()


def descendant_indicator_discrete(T: PartitionTree, i: int, j: int, k: int) -> bool:
    """Whether leaf ``k`` lies under ``lca(i, j)``, decided from LCA depths alone."""
    depth = T.depth
    d_ij = depth[lca(T, i, j)]
    return bool(d_ij <= depth[lca(T, i, k)] and d_ij <= depth[lca(T, j, k)])


def centroid_loss(lorentz: torch.Tensor, curvature: float = -1.0) -> torch.Tensor:
    """Lorentz distance from the origin to the normalized centroid of all points."""
    total = lorentz.sum(0)
    modulus_sq = -manifold.linner(total, total)
    if float(modulus_sq.detach()) <= 0.0:
        raise ValueError("centroid has zero Lorentz norm")
    centroid = manifold.normalize_lorentz(total, curvature)
    return manifold.origin_distance(centroid)


def total_loss(cse, con, cen, cfg: CseConfig):
    return cse + cfg.eta1 * con + cfg.eta2 * cen
