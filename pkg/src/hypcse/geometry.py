"""Exact hyperbolic kernels for the Lorentz and Poincare models.

Everything here works on plain numpy vectors and is meant for reference
evaluation, tests and decoding. Differentiable batched versions used during
training live in :mod:`hypcse.manifold`.

Curvature is fixed to ``-1`` by default, so the Poincare ball has radius 1 and
Lorentz points satisfy ``<x, x>_L = -1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MANIFOLD_TOL = 1e-6
ARTANH_MAX = 1.0 - 1e-12
DEGENERATE_PAIR_TOL = 1e-12
COLLINEAR_TOL = 1e-10


class GeometryError(ValueError):
    """Raised when an input violates a manifold precondition."""


@dataclass(frozen=True)
class ManifoldConfig:
    curvature: float = -1.0
    dim: int = 2

    def __post_init__(self):
        if not self.curvature < 0:
            raise GeometryError(f"curvature must be negative, got {self.curvature}")
        if self.dim < 2:
            raise GeometryError(f"dim must be >= 2, got {self.dim}")


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def lorentz_inner(x, y) -> float:
    """Minkowski inner product ``-x0*y0 + sum_i xi*yi``."""
    x, y = _vec(x), _vec(y)
    if x.shape != y.shape:
        raise GeometryError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(-x[0] * y[0] + x[1:] @ y[1:])


def check_lorentz(x, curvature: float = -1.0, tol: float = MANIFOLD_TOL) -> None:
    x = _vec(x)
    if x[0] <= 0 or abs(lorentz_inner(x, x) - 1.0 / curvature) > tol:
        raise GeometryError(f"point is not on the hyperboloid: {x}")


def lorentz_distance(x, y, curvature: float = -1.0) -> float:
    x, y = _vec(x), _vec(y)
    check_lorentz(x, curvature)
    check_lorentz(y, curvature)
    scale = 1.0 / np.sqrt(-curvature)
    arg = max(-lorentz_inner(x, y) * (-curvature), 1.0)
    return float(scale * np.arccosh(arg))


def lorentz_to_poincare(x) -> np.ndarray:
    x = _vec(x)
    return x[1:] / (1.0 + x[0])


def poincare_to_lorentz(u) -> np.ndarray:
    u = _vec(u)
    sq = float(u @ u)
    if sq >= 1.0:
        raise GeometryError(f"point lies outside the unit ball: norm^2={sq}")
    return np.concatenate(([1.0 + sq], 2.0 * u)) / (1.0 - sq)


def tangent_project(x, v, curvature: float = -1.0) -> np.ndarray:
    """Project an ambient vector onto the tangent space at ``x``: ``v - k <x, v>_L x``."""
    x, v = _vec(x), _vec(v)
    return v - curvature * lorentz_inner(x, v) * x


def renormalize(x, curvature: float = -1.0) -> np.ndarray:
    """Recompute the time coordinate so ``x`` sits exactly on the hyperboloid."""
    x = _vec(x)
    space = x[1:]
    return np.concatenate(([np.sqrt(space @ space - 1.0 / curvature)], space))


def expmap(x, v, curvature: float = -1.0) -> np.ndarray:
    x, v = _vec(x), _vec(v)
    sq = lorentz_inner(v, v)
    norm = np.sqrt(max(sq, 0.0) * -curvature)
    if norm < 1e-12:
        return x.copy()
    out = np.cosh(norm) * x + np.sinh(norm) * v / norm
    return renormalize(out, curvature)


# -- geodesic closest point to the origin (Poincare ball) --------------------


def _invert(center: np.ndarray, p: np.ndarray) -> np.ndarray:
    # inversion in the circle centred at `center` that is orthogonal to the unit sphere
    diff = p - center
    return (center @ center - 1.0) / (diff @ diff) * diff + center


def point_origin_value(norm: float) -> float:
    """Value of :func:`geodesic_origin_distance` when the geodesic is a single point.

    Reflecting the origin through a point at Euclidean norm ``a`` lands at norm
    ``2a / (1 + a^2)``; the result is fed through the same ``artanh(.^2)/2`` map.
    """
    ref = 2.0 * norm / (1.0 + norm * norm)
    return float(np.arctanh(min(ref * ref, ARTANH_MAX)) / 2.0)


def reflect_origin(x, y) -> np.ndarray:
    """Mirror image of the origin across the full geodesic line through x and y.

    Implements the circle-inversion chain: invert through the circle centred
    at ``x / |x|^2`` (which swaps ``x`` and the origin), reflect across the
    straight line through the new origin and the image of ``y``, invert back.
    """
    x, y = _vec(x), _vec(y)
    r = x / (x @ x)
    y_inv = _invert(r, y)
    o_invref = 2.0 * (x @ y_inv) / (y_inv @ y_inv) * y_inv - x
    return _invert(r, o_invref)


def geodesic_origin_distance(x, y) -> float:
    """Depth of the hyperbolic LCA of two Poincare points.

    Returns ``artanh(|o_ref|^2) / 2`` where ``o_ref`` is the reflection of the
    origin across the geodesic, restricted to the segment between ``x`` and
    ``y``: when the closest point of the full geodesic falls outside the
    segment, the nearer endpoint is used instead. The quantity is a monotone
    transform of the hyperbolic distance from the origin to the segment.
    """
    x, y = _vec(x), _vec(y)
    if x @ x >= 1.0 or y @ y >= 1.0:
        raise GeometryError("points must lie strictly inside the unit ball")
    nx, ny = float(np.sqrt(x @ x)), float(np.sqrt(y @ y))
    if nx == 0.0 or ny == 0.0:
        return 0.0
    diff = x - y
    if diff @ diff < DEGENERATE_PAIR_TOL**2:
        return point_origin_value(min(nx, ny))
    gram = (x @ x) * (y @ y) - (x @ y) ** 2
    if gram < COLLINEAR_TOL * (x @ x) * (y @ y):
        # the geodesic is a diameter
        if x @ y <= 0:
            return 0.0
        return point_origin_value(min(nx, ny))
    o_ref = reflect_origin(x, y)
    axis = o_ref / np.sqrt(o_ref @ o_ref)
    x_perp = x - (x @ axis) * axis
    y_perp = y - (y @ axis) * axis
    if x_perp @ y_perp > 0:
        # both endpoints on one side of the closest point
        return point_origin_value(min(nx, ny))
    sq = float(o_ref @ o_ref)
    return float(np.arctanh(min(sq, ARTANH_MAX)) / 2.0)


def poincare_distance_to_origin(u) -> float:
    u = _vec(u)
    return float(2.0 * np.arctanh(min(np.sqrt(u @ u), ARTANH_MAX)))
