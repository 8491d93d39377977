"""Lorentz neural layers: linear map, attention aggregation, the encoder and projector."""

from __future__ import annotations

import math

import torch
from torch import nn

from .. import manifold

LEAKY_SLOPE = 0.1


def uniform_init(param: torch.Tensor, fan_in: int, generator: torch.Generator) -> None:
    bound = 1.0 / math.sqrt(fan_in)
    with torch.no_grad():
        param.copy_(torch.rand(param.shape, generator=generator, dtype=param.dtype) * 2 * bound - bound)


class LorentzLinear(nn.Module):
    """``x -> (sqrt(|v|^2 + 1), v)`` with ``v = act(W x) + b``.

    ``in_dim`` counts all Lorentz coordinates of the input (time included);
    ``out_dim`` is the spatial dimension of the output.
    """

    def __init__(self, in_dim: int, out_dim: int, activation: str = "none",
                 generator: torch.Generator | None = None, dtype=torch.float64):
        super().__init__()
        if activation not in ("none", "leaky"):
            raise ValueError(f"unknown activation {activation!r}")
        self.activation = activation
        self.weight = nn.Parameter(torch.empty(out_dim, in_dim, dtype=dtype))
        self.bias = nn.Parameter(torch.zeros(out_dim, dtype=dtype))
        generator = generator or torch.Generator().manual_seed(0)
        uniform_init(self.weight, in_dim, generator)
        with torch.no_grad():
            # the time coordinate is shared by all points; reading it at init
            # adds one common vector to every output and collapses directions
            self.weight[:, 0] = 0.0

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        v = x @ self.weight.T
        if self.activation == "leaky":
            v = nn.functional.leaky_relu(v, LEAKY_SLOPE)
        return manifold.lift(v + self.bias)


def directed_edges(n: int, rows, cols, weights=None):
    """Both edge directions plus a self-loop per vertex; returns ``(src, dst, w)``."""
    rows = torch.as_tensor(rows, dtype=torch.long)
    cols = torch.as_tensor(cols, dtype=torch.long)
    loops = torch.arange(n)
    src = torch.cat([rows, cols, loops])
    dst = torch.cat([cols, rows, loops])
    if weights is None:
        return src, dst, None
    weights = torch.as_tensor(weights)
    w = torch.cat([weights, weights, torch.ones(n, dtype=weights.dtype)])
    return src, dst, w


def segment_softmax(scores: torch.Tensor, index: torch.Tensor, n: int) -> torch.Tensor:
    """Softmax of ``scores`` within groups sharing the same ``index``."""
    top = torch.full((n,), -torch.inf, dtype=scores.dtype)
    top = top.scatter_reduce(0, index, scores.detach(), reduce="amax")
    e = torch.exp(scores - top[index])
    total = torch.zeros(n, dtype=scores.dtype).index_add(0, index, e)
    return e / total[index]


class LorentzAggregation(nn.Module):
    """Attention over each closed neighborhood with queries, keys and values on the hyperboloid.

    Scores are ``-d_L(q_i, k_j)^2 / sqrt(dim)`` (plus ``log w_ij`` when edge
    weights are supplied); the weighted sum of values is renormalized onto
    the hyperboloid.
    """

    def __init__(self, dim: int, generator: torch.Generator | None = None, dtype=torch.float64):
        super().__init__()
        self.dim = dim
        self.query = LorentzLinear(dim + 1, dim, generator=generator, dtype=dtype)
        self.key = LorentzLinear(dim + 1, dim, generator=generator, dtype=dtype)
        self.value = LorentzLinear(dim + 1, dim, generator=generator, dtype=dtype)

    def attention(self, x, src, dst, w=None):
        q, k = self.query(x), self.key(x)
        scores = -manifold.sq_lorentz_distance(q[dst], k[src]) / math.sqrt(self.dim)
        if w is not None:
            scores = scores + torch.log(w)
        return segment_softmax(scores, dst, x.shape[0])

    def forward(self, x: torch.Tensor, src, dst, w=None) -> torch.Tensor:
        att = self.attention(x, src, dst, w)
        v = self.value(x)
        summed = torch.zeros_like(v).index_add(0, dst, att.unsqueeze(1) * v[src])
        return manifold.normalize_lorentz(summed)


class LorentzConv(nn.Module):
    def __init__(self, in_dim: int, out_dim: int, activation: str,
                 generator: torch.Generator | None = None, dtype=torch.float64):
        super().__init__()
        self.linear = LorentzLinear(in_dim, out_dim, activation, generator, dtype)
        self.aggregate = LorentzAggregation(out_dim, generator, dtype)

    def forward(self, x, src, dst, w=None):
        return self.aggregate(self.linear(x), src, dst, w)


class Encoder(nn.Module):
    """Three stacked Lorentz convolutions mapping raw features to the hyperboloid."""

    def __init__(self, in_features: int, hidden: int = 16, embed: int = 16, layers: int = 3,
                 generator: torch.Generator | None = None, dtype=torch.float64):
        super().__init__()
        dims = [in_features] + [hidden] * (layers - 1) + [embed]
        acts = ["leaky"] * (layers - 1) + ["none"]
        self.convs = nn.ModuleList(
            LorentzConv(dims[t] + 1, dims[t + 1], acts[t], generator, dtype) for t in range(layers)
        )

    def forward(self, features: torch.Tensor, rows, cols, weights=None) -> torch.Tensor:
        n = features.shape[0]
        src, dst, w = directed_edges(n, rows, cols, weights)
        h = manifold.lift(features)
        for conv in self.convs:
            h = conv(h, src, dst, w)
        return h


class Projector(nn.Module):
    def __init__(self, embed: int = 16, hidden: int = 16,
                 generator: torch.Generator | None = None, dtype=torch.float64):
        super().__init__()
        self.first = LorentzLinear(embed + 1, hidden, "leaky", generator, dtype)
        self.second = LorentzLinear(hidden + 1, embed, "none", generator, dtype)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.second(self.first(z))


def lorentz_linear(x: torch.Tensor, layer: LorentzLinear) -> torch.Tensor:
    return layer(x)


def lorentz_aggregate(x: torch.Tensor, graph, layer: LorentzAggregation, weights=None) -> torch.Tensor:
    src, dst, w = directed_edges(graph.n, graph.rows, graph.cols, weights)
    return layer(x, src, dst, w)
