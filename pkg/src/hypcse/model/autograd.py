"""Reverse-mode gradients for named parameters.

The tape is torch's autograd graph; this module adds the parameter registry
contract: scalar losses only, and unused parameters receive exact zeros.
"""

from __future__ import annotations

from collections.abc import Mapping

import torch


class NonScalarLossError(ValueError):
    pass


def backward(loss: torch.Tensor, params: Mapping[str, torch.Tensor],
             accumulate: bool = True) -> dict[str, torch.Tensor]:
    """Gradients of ``loss`` w.r.t. each named parameter; also stored in ``.grad`` when ``accumulate``."""
    if not torch.is_tensor(loss) or loss.numel() != 1 or loss.dim() > 1:
        raise NonScalarLossError(f"loss must be a scalar, got shape {tuple(getattr(loss, 'shape', ()))}")
    names = list(params)
    tensors = [params[k] for k in names]
    if loss.requires_grad:
        grads = torch.autograd.grad(loss.reshape(()), tensors, allow_unused=True)
    else:
        grads = [None] * len(tensors)
    out = {}
    for name, p, g in zip(names, tensors, grads):
        g = torch.zeros_like(p) if g is None else g
        out[name] = g
        if accumulate:
            p.grad = g.clone() if p.grad is None else p.grad + g
    return out
