"""Batched, differentiable hyperbolic operations on torch tensors.

Curvature is -1 throughout. Lorentz points are rows ``(x0, x1, ..., xd)``.
"""

from __future__ import annotations

import torch

ARTANH_MAX = 1.0 - 1e-12
ACOSH_MIN = 1.0 + 1e-12


def linner(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Minkowski inner product over the last axis."""
    return (x[..., 1:] * y[..., 1:]).sum(-1) - x[..., 0] * y[..., 0]


def lift(space: torch.Tensor, curvature: float = -1.0) -> torch.Tensor:
    """Attach the time coordinate that puts ``space`` on the hyperboloid."""
    time = torch.sqrt((space * space).sum(-1, keepdim=True) - 1.0 / curvature)
    return torch.cat([time, space], dim=-1)


def normalize_lorentz(s: torch.Tensor, curvature: float = -1.0) -> torch.Tensor:
    """Rescale a time-like vector onto the hyperboloid: ``s / (sqrt(-k) |‖s‖_L|)``."""
    modulus = torch.sqrt(torch.clamp(-linner(s, s), min=1e-15))
    return s / ((-curvature) ** 0.5 * modulus).unsqueeze(-1)


def sq_lorentz_distance(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Squared geodesic distance. ``arcosh(z)^2`` is smooth at ``z = 1``; the clamp keeps autograd finite."""
    z = torch.clamp(-linner(x, y), min=ACOSH_MIN)
    return torch.arccosh(z) ** 2


def lorentz_distance(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    return torch.arccosh(torch.clamp(-linner(x, y), min=ACOSH_MIN))


def pairwise_lorentz_distance(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    inner = x[:, 1:] @ y[:, 1:].T - torch.outer(x[:, 0], y[:, 0])
    return torch.arccosh(torch.clamp(-inner, min=ACOSH_MIN))


def to_poincare(x: torch.Tensor) -> torch.Tensor:
    return x[..., 1:] / (1.0 + x[..., :1])


def origin_distance(x: torch.Tensor) -> torch.Tensor:
    """Lorentz distance from the hyperboloid origin ``(1, 0, ..., 0)``.

    Uses ``asinh(|space|)``, exact at the origin where ``arccosh(x0)`` loses precision.
    """
    return torch.asinh(torch.linalg.vector_norm(x[..., 1:], dim=-1))


def _point_value(sq_norm: torch.Tensor) -> torch.Tensor:
    # value for a degenerate (single point) geodesic at squared Euclidean norm a
    ref_sq = 4.0 * sq_norm / (1.0 + sq_norm) ** 2
    return torch.atanh(torch.clamp(ref_sq, max=ARTANH_MAX)) / 2.0


def lca_depth_from_gram(a: torch.Tensor, b: torch.Tensor, c: torch.Tensor,
                        collinear_tol: float = 1e-10) -> torch.Tensor:
    """Geodesic-to-origin value from squared norms ``a``, ``b`` and dot product ``c``.

    The reflected origin has squared norm ``4(ab - c^2) / |(1+a)y - (1+b)x|^2``,
    which only involves the Gram entries. When the closest point of the full
    geodesic is not between the two endpoints, the nearer endpoint is used.
    """
    det = a * b - c * c
    den = (1.0 + a) ** 2 * b + (1.0 + b) ** 2 * a - 2.0 * c * (1.0 + a) * (1.0 + b)
    degenerate = (det <= collinear_tol * a * b) | (den <= 1e-300)
    safe_den = torch.where(degenerate, torch.ones_like(den), den)
    safe_det = torch.where(degenerate, torch.ones_like(det), det)
    ref_sq = 4.0 * safe_det / safe_den
    geodesic_value = torch.atanh(torch.clamp(ref_sq, max=ARTANH_MAX)) / 2.0
    endpoint_value = _point_value(torch.minimum(a, b))
    # closest point of the geodesic lies between x and y iff their components
    # orthogonal to the symmetry axis have opposite signs
    between = c * safe_den <= (1.0 + a) * (1.0 + b) * safe_det
    value = torch.where(between, geodesic_value, endpoint_value)
    diameter_value = torch.where(c <= 0, torch.zeros_like(a), endpoint_value)
    value = torch.where(degenerate, diameter_value, value)
    zero = (a <= 0) | (b <= 0)
    return torch.where(zero, torch.zeros_like(value), value)


def lca_depth_from_lorentz_gram(V: torch.Tensor, W: torch.Tensor, P: torch.Tensor,
                                t: torch.Tensor, s: torch.Tensor,
                                collinear_tol: float = 1e-10) -> torch.Tensor:
    """The same geodesic-to-origin value, evaluated from Lorentz coordinates.

    With spatial parts ``v, w`` (``V = |v|^2``, ``W = |w|^2``, ``P = v.w``) and
    time parts ``t, s``, the reflected origin satisfies
    ``|o_ref|^2 = det / (det + sinh^2 d_L)`` where ``det = VW - P^2`` and
    ``cosh d_L = ts - P``. Hence ``artanh(|o_ref|^2) / 2 = log1p(2 det / sinh^2 d_L) / 4``,
    which stays accurate for points near the ideal boundary where the
    Poincare form cancels catastrophically. A single point gives ``log1p(2V) / 4``.
    """
    det = V * W - P * P
    cosh = torch.clamp(t * s - P, min=1.0)
    sinh_sq = (cosh - 1.0) * (cosh + 1.0)
    degenerate = (det <= collinear_tol * V * W) | (sinh_sq <= 0)
    safe_sinh = torch.where(degenerate, torch.ones_like(sinh_sq), sinh_sq)
    safe_det = torch.where(degenerate, torch.ones_like(det), det)
    geodesic_value = torch.log1p(2.0 * safe_det / safe_sinh) / 4.0
    endpoint_value = torch.log1p(2.0 * torch.minimum(V, W)) / 4.0
    between = P * (safe_det + safe_sinh) <= t * s * safe_det
    value = torch.where(between, geodesic_value, endpoint_value)
    diameter_value = torch.where(P <= 0, torch.zeros_like(V), endpoint_value)
    value = torch.where(degenerate, diameter_value, value)
    zero = (V <= 0) | (W <= 0)
    return torch.where(zero, torch.zeros_like(value), value)


def pairwise_lca_depth_lorentz(x: torch.Tensor) -> torch.Tensor:
    """``n x n`` LCA depths for hyperboloid points ``x``."""
    space, time = x[:, 1:], x[:, 0]
    P = space @ space.T
    V = torch.diagonal(P)
    return lca_depth_from_lorentz_gram(V.unsqueeze(1), V.unsqueeze(0), P,
                                       time.unsqueeze(1), time.unsqueeze(0))


def geodesic_origin_distance(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Row-wise LCA depth for Poincare points ``x`` and ``y`` of equal shape."""
    return lca_depth_from_gram((x * x).sum(-1), (y * y).sum(-1), (x * y).sum(-1))


def pairwise_lca_depth(z: torch.Tensor) -> torch.Tensor:
    """``n x n`` matrix of LCA depths for Poincare points ``z``; O(n^2) memory."""
    gram = z @ z.T
    sq = torch.diagonal(gram)
    return lca_depth_from_gram(sq.unsqueeze(1), sq.unsqueeze(0), gram)
