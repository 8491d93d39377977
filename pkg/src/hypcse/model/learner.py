"""Euclidean graph learners producing vertex embeddings for the learner graph."""

from __future__ import annotations

import torch
from torch import nn

from .layers import uniform_init


def normalized_adjacency(n: int, rows, cols, weights=None, dtype=torch.float64) -> torch.Tensor:
    """Dense ``D^-1/2 (A + I) D^-1/2``."""
    A = torch.eye(n, dtype=dtype)
    rows = torch.as_tensor(rows, dtype=torch.long)
    cols = torch.as_tensor(cols, dtype=torch.long)
    w = torch.ones(rows.numel(), dtype=dtype) if weights is None else torch.as_tensor(weights, dtype=dtype)
    A = A.index_put((rows, cols), w, accumulate=True).index_put((cols, rows), w, accumulate=True)
    inv_sqrt = A.sum(1).rsqrt()
    return inv_sqrt[:, None] * A * inv_sqrt[None, :]


class GraphLearner(nn.Module):
    """Two-layer GCN or MLP whose outputs are L2-normalized per row.

    ``activation=False`` drops the hidden ReLU; ``identity_init`` starts from
    identity weights (square shapes only).
    """

    def __init__(self, in_features: int, hidden: int = 16, out: int = 16, variant: str = "gcn",
                 activation: bool = True, identity_init: bool = False,
                 generator: torch.Generator | None = None, dtype=torch.float64):
        super().__init__()
        if variant not in ("gcn", "mlp"):
            raise ValueError(f"unknown learner variant {variant!r}")
        self.variant = variant
        self.activation = activation
        self.w1 = nn.Parameter(torch.empty(in_features, hidden, dtype=dtype))
        self.b1 = nn.Parameter(torch.zeros(hidden, dtype=dtype))
        self.w2 = nn.Parameter(torch.empty(hidden, out, dtype=dtype))
        self.b2 = nn.Parameter(torch.zeros(out, dtype=dtype))
        generator = generator or torch.Generator().manual_seed(0)
        if identity_init:
            with torch.no_grad():
                self.w1.copy_(torch.eye(in_features, hidden, dtype=dtype))
                self.w2.copy_(torch.eye(hidden, out, dtype=dtype))
        else:
            uniform_init(self.w1, in_features, generator)
            uniform_init(self.w2, hidden, generator)

    def forward(self, features: torch.Tensor, rows=None, cols=None, weights=None) -> torch.Tensor:
        h = features
        prop = None
        if self.variant == "gcn":
            prop = normalized_adjacency(features.shape[0], rows, cols, weights, features.dtype)
            h = prop @ h
        h = h @ self.w1 + self.b1
        if self.activation:
            h = torch.relu(h)
        if prop is not None:
            h = prop @ h
        h = h @ self.w2 + self.b2
        return h / torch.linalg.vector_norm(h, dim=1, keepdim=True).clamp_min(1e-12)


def graph_learner(features, rows, cols, learner: GraphLearner, weights=None) -> torch.Tensor:
    return learner(features, rows, cols, weights)
