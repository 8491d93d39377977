"""Graph structure learning: learner graphs, anchor updates, augmentation and contrastive loss."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import torch

from .graph import WeightedGraph

MIN_EDGE_WEIGHT = 1e-6


@dataclass(frozen=True)
class AugmentConfig:
    edge_drop_rate: float = 0.2
    feature_mask_rate: float = 0.2
    seed: int = 0

    def __post_init__(self):
        for name in ("edge_drop_rate", "feature_mask_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {rate}")


@dataclass
class LearnerGraph:
    """Learner edge set whose weights stay attached to the autograd graph."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: torch.Tensor

    def detached(self) -> WeightedGraph:
        return WeightedGraph(self.n, self.rows, self.cols, self.weights.detach().numpy().copy())


@dataclass
class AnchorState:
    anchor: WeightedGraph
    learner: WeightedGraph | None = None
    tau: float = 0.9999
    top_p: int = 10

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if self.top_p < 1:
            raise ValueError("top_p must be positive")


def learner_affinity(E: torch.Tensor, metric: str = "cosine", sigma: float = 1.0) -> torch.Tensor:
    """Pairwise affinities: dot products of row-normalized embeddings or a Gaussian kernel."""
    if metric == "cosine":
        return E @ E.T
    if metric == "gaussian":
        sq = (E * E).sum(1)
        d2 = torch.clamp(sq[:, None] + sq[None, :] - 2.0 * E @ E.T, min=0.0)
        return torch.exp(-d2 / (2.0 * sigma**2))
    raise ValueError(f"unknown affinity metric {metric!r}")


def build_learner_graph(E: torch.Tensor, p: int, metric: str = "cosine") -> LearnerGraph:
    """Per-vertex top-``p`` affinities symmetrized by union; ties go to the lower index.

    Weights are the affinities, floored at ``MIN_EDGE_WEIGHT`` so that every
    kept edge is positive.
    """
    n = E.shape[0]
    if n < 2:
        raise ValueError("need at least two vertices")
    if p < 1:
        raise ValueError("p must be positive")
    p = min(p, n - 1)
    aff = learner_affinity(E, metric)
    scores = aff.detach().numpy().copy()
    np.fill_diagonal(scores, -np.inf)
    order = np.argsort(-scores, axis=1, kind="stable")[:, :p]
    src = np.repeat(np.arange(n), p)
    dst = order.ravel()
    keys = np.unique(np.minimum(src, dst) * n + np.maximum(src, dst))
    rows, cols = keys // n, keys % n
    weights = torch.clamp(aff[rows, cols], min=MIN_EDGE_WEIGHT)
    return LearnerGraph(n, rows, cols, weights)


def update_anchor(state: AnchorState, rng: np.random.Generator) -> AnchorState:
    """Keep each anchor edge with probability ``tau``; sample each learner edge with ``1 - tau``.

    The result is the union of both samples; an edge drawn from both keeps
    its anchor weight.
    """
    A, L = state.anchor, state.learner
    keep = rng.random(A.num_edges) < state.tau
    rows, cols, weights = [A.rows[keep]], [A.cols[keep]], [A.weights[keep]]
    if L is not None and L.num_edges:
        fresh = ~np.isin(L.edge_keys(), A.edge_keys()[keep])
        adopt = rng.random(L.num_edges) < 1.0 - state.tau
        take = fresh & adopt
        rows.append(L.rows[take])
        cols.append(L.cols[take])
        weights.append(L.weights[take])
    rows, cols, weights = np.concatenate(rows), np.concatenate(cols), np.concatenate(weights)
    if rows.size == 0:
        warnings.warn("anchor update produced an empty graph; keeping the previous anchor")
        return state
    order = np.argsort(rows * A.n + cols, kind="stable")
    new = A.with_edges(rows[order], cols[order], weights[order])
    return AnchorState(new, state.learner, state.tau, state.top_p)


def drop_edges(num_edges: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Boolean mask of surviving edges."""
    return rng.random(num_edges) >= rate


def mask_features(X, rate: float, rng: np.random.Generator):
    """Zero each feature entry independently with probability ``rate``."""
    keep = rng.random(tuple(X.shape)) >= rate
    if torch.is_tensor(X):
        return X * torch.as_tensor(keep, dtype=X.dtype)
    return np.asarray(X) * keep


def augment(G: WeightedGraph, cfg: AugmentConfig, rng: np.random.Generator | None = None) -> WeightedGraph:
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    keep = drop_edges(G.num_edges, cfg.edge_drop_rate, rng)
    feats = None if G.features is None else mask_features(G.features, cfg.feature_mask_rate, rng)
    return WeightedGraph(G.n, G.rows[keep], G.cols[keep], G.weights[keep], feats, G.ids)


def pairwise_distance(x: torch.Tensor, y: torch.Tensor, eps: float = 1e-12) -> torch.Tensor:
    """Lorentz distances ``2 asinh(sqrt((z - 1) / 2))`` with ``z = -<x, y>_L``; finite gradients at ``x = y``."""
    inner = x[:, 1:] @ y[:, 1:].T - torch.outer(x[:, 0], y[:, 0])
    half = torch.clamp((-inner - 1.0) / 2.0, min=0.0)
    return 2.0 * torch.asinh(torch.sqrt(half + eps))


def contrastive_loss(P_a: torch.Tensor, P_l: torch.Tensor, t2: float = 1.0, r2: float = 0.0) -> torch.Tensor:
    """Symmetric InfoNCE with logits ``(r2 - d_L(p_l^i, p_a^k)) / t2``; positives on the diagonal."""
    if P_a.shape != P_l.shape:
        raise ValueError(f"view shapes differ: {tuple(P_a.shape)} vs {tuple(P_l.shape)}")
    n = P_a.shape[0]
    if n == 0:
        raise ValueError("need at least one vertex")
    logits = (r2 - pairwise_distance(P_l, P_a)) / t2
    forward = -torch.diagonal(torch.log_softmax(logits, dim=1))
    backward = -torch.diagonal(torch.log_softmax(logits.T, dim=1))
    return (forward.sum() + backward.sum()) / (2.0 * n)

