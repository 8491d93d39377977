"""Adam for Euclidean parameters and Riemannian Adam for hyperboloid-valued ones."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch

from .. import manifold


class NonFiniteGradientError(FloatingPointError):
    pass


def tangent_project(x: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
    """``v + <x, v>_L x``: removes the component of ``v`` normal to the hyperboloid at ``x``."""
    return v + manifold.linner(x, v).unsqueeze(-1) * x


def expmap(x: torch.Tensor, v: torch.Tensor, eps: float = 1e-12) -> torch.Tensor:
    norm = torch.sqrt(torch.clamp(manifold.linner(v, v), min=0.0)).unsqueeze(-1)
    safe = torch.where(norm < eps, torch.ones_like(norm), norm)
    moved = torch.cosh(norm) * x + torch.sinh(norm) * v / safe
    return torch.where(norm < eps, x, moved)


def renormalize(x: torch.Tensor) -> torch.Tensor:
    """Recompute the time coordinate from the spatial part."""
    return manifold.lift(x[..., 1:])


@dataclass
class ParamGroup:
    names: list[str]
    params: list[torch.Tensor]
    lr: float
    riemannian: bool = False


@dataclass
class OptimizerState:
    groups: list[ParamGroup]
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    step_count: int = 0
    first: dict = field(default_factory=dict)
    second: dict = field(default_factory=dict)


class RiemannianAdam:
    """Adam over parameter groups; groups flagged ``riemannian`` hold hyperboloid points (one per row).

    For those groups the Euclidean gradient is mapped to the Riemannian one,
    moments live in the tangent space (the second moment is one Minkowski
    square norm per point), the step is an exponential map followed by
    renormalization and the first moment is re-projected onto the new tangent space.
    """

    def __init__(self, groups: list[ParamGroup], betas=(0.9, 0.999), eps: float = 1e-8):
        for g in groups:
            if len(g.names) != len(g.params):
                raise ValueError("each parameter needs a name")
        self.state = OptimizerState(list(groups), tuple(betas), eps)
        for g in groups:
            for name, p in zip(g.names, g.params):
                self.state.first[name] = torch.zeros_like(p)
                shape = p.shape[:-1] + (1,) if g.riemannian else p.shape
                self.state.second[name] = torch.zeros(shape, dtype=p.dtype)

    def zero_grad(self) -> None:
        for g in self.state.groups:
            for p in g.params:
                p.grad = None

    @torch.no_grad()
    def step(self) -> None:
        st = self.state
        b1, b2 = st.betas
        for g in st.groups:
            for name, p in zip(g.names, g.params):
                if p.grad is not None and not bool(torch.isfinite(p.grad).all()):
                    raise NonFiniteGradientError(f"non-finite gradient for parameter {name!r}")
        st.step_count += 1
        t = st.step_count
        c1, c2 = 1.0 - b1 ** t, 1.0 - b2 ** t
        for g in st.groups:
            for name, p in zip(g.names, g.params):
                grad = p.grad if p.grad is not None else torch.zeros_like(p)
                m, v = st.first[name], st.second[name]
                if g.riemannian:
                    rgrad = grad.clone()
                    rgrad[..., 0] = -rgrad[..., 0]
                    rgrad = tangent_project(p, rgrad)
                    m.mul_(b1).add_(rgrad, alpha=1.0 - b1)
                    v.mul_(b2).add_(manifold.linner(rgrad, rgrad).clamp_min(0.0).unsqueeze(-1), alpha=1.0 - b2)
                    direction = -g.lr * (m / c1) / (torch.sqrt(v / c2) + st.eps)
                    new = renormalize(expmap(p, direction))
                    p.copy_(new)
                    m.copy_(tangent_project(p, m))
                else:
                    m.mul_(b1).add_(grad, alpha=1.0 - b1)
                    v.mul_(b2).addcmul_(grad, grad, value=1.0 - b2)
                    p.sub_(g.lr * (m / c1) / (torch.sqrt(v / c2) + st.eps))


def optimizer_step(opt: RiemannianAdam) -> None:
    opt.step()


def effective_lr(lr: float, step: int, betas=(0.9, 0.999)) -> float:
    return lr * math.sqrt(1 - betas[1] ** step) / (1 - betas[0] ** step)
