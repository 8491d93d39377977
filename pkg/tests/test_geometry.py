import math

import numpy as np
import pytest
import torch

from hypcse import geometry, manifold
from hypcse.oracles import origin_value_from_distance, sampled_origin_distance

SQ2 = math.sqrt(2.0)


def random_lorentz(rng, dim=3, scale=1.0):
    return geometry.poincare_to_lorentz(random_ball(rng, dim, 0.95) * scale)


def random_ball(rng, dim, max_norm):
    u = rng.normal(size=dim)
    return u / np.linalg.norm(u) * rng.uniform(0.0, max_norm)


def test_manifold_config_rejects_bad_values():
    with pytest.raises(geometry.GeometryError):
        geometry.ManifoldConfig(curvature=1.0)
    with pytest.raises(geometry.GeometryError):
        geometry.ManifoldConfig(dim=1)


@pytest.mark.parametrize("x, y, expected", [
    ((1, 0, 0), (1, 0, 0), -1.0),
    ((SQ2, 1, 0), (SQ2, 1, 0), -1.0),
    ((1, 0, 0), (SQ2, 1, 0), -SQ2),
])
def test_lorentz_inner_hand_values(x, y, expected):
    assert geometry.lorentz_inner(x, y) == pytest.approx(expected, abs=1e-12)


def test_lorentz_inner_dimension_mismatch():
    with pytest.raises(geometry.GeometryError):
        geometry.lorentz_inner((1, 0), (1, 0, 0))


def test_lorentz_distance_examples():
    assert geometry.lorentz_distance((1, 0, 0), (1, 0, 0)) == 0.0
    assert geometry.lorentz_distance((1, 0), (SQ2, 1)) == pytest.approx(0.881373587, abs=1e-8)


def test_lorentz_distance_symmetric():
    rng = np.random.default_rng(0)
    for _ in range(100):
        x, y = random_lorentz(rng), random_lorentz(rng)
        assert geometry.lorentz_distance(x, y) == pytest.approx(geometry.lorentz_distance(y, x), abs=1e-12)


def test_lorentz_distance_rejects_off_manifold():
    with pytest.raises(geometry.GeometryError):
        geometry.lorentz_distance((1, 1, 0), (1, 0, 0))


def test_model_conversions():
    assert np.allclose(geometry.lorentz_to_poincare((1, 0, 0)), (0, 0))
    assert np.allclose(geometry.lorentz_to_poincare((SQ2, 1, 0)), (1 / (1 + SQ2), 0))
    assert np.allclose(geometry.poincare_to_lorentz((0, 0)), (1, 0, 0))
    assert np.allclose(geometry.poincare_to_lorentz((0.41421, 0)), (SQ2, 1, 0), atol=1e-4)
    with pytest.raises(geometry.GeometryError):
        geometry.poincare_to_lorentz((1.0, 0.0))


def test_round_trip_and_constraint_on_random_points():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        x = random_lorentz(rng, dim=4)
        assert geometry.lorentz_inner(x, x) == pytest.approx(-1.0, abs=1e-9)
        back = geometry.poincare_to_lorentz(geometry.lorentz_to_poincare(x))
        assert np.allclose(back, x, rtol=1e-9, atol=1e-9)


def test_tangent_projection():
    rng = np.random.default_rng(2)
    x = random_lorentz(rng)
    v = rng.normal(size=4)
    t = geometry.tangent_project(x, v)
    assert geometry.lorentz_inner(x, t) == pytest.approx(0.0, abs=1e-8)
    assert np.allclose(geometry.tangent_project(x, t), t, atol=1e-9)
    assert np.allclose(geometry.tangent_project(x, x), 0.0, atol=1e-9)


def test_expmap_identity_constraint_and_length():
    rng = np.random.default_rng(3)
    for _ in range(50):
        x = random_lorentz(rng)
        assert np.array_equal(geometry.expmap(x, np.zeros(4)), x)
        v = geometry.tangent_project(x, 0.3 * rng.normal(size=4))
        y = geometry.expmap(x, v)
        assert geometry.lorentz_inner(y, y) == pytest.approx(-1.0, abs=1e-6)
        norm = math.sqrt(geometry.lorentz_inner(v, v))
        assert geometry.lorentz_distance(x, y) == pytest.approx(norm, abs=1e-6)


def test_geodesic_through_origin_is_zero():
    for r in (0.1, 0.5, 0.99):
        assert geometry.geodesic_origin_distance((r, 0), (-r, 0)) == 0.0
    assert geometry.geodesic_origin_distance((0, 0), (0.5, 0.2)) == 0.0


def test_geodesic_origin_regression_fixture():
    # frozen against the sampling oracle
    value = geometry.geodesic_origin_distance((0.5, 0.0), (0.0, 0.5))
    oracle = origin_value_from_distance(sampled_origin_distance((0.5, 0.0), (0.0, 0.5)))
    assert value == pytest.approx(oracle, abs=1e-6)
    assert value == pytest.approx(0.16582355435, abs=1e-9)


def test_geodesic_origin_collinear_uses_nearer_endpoint():
    value = geometry.geodesic_origin_distance((0.3, 0.0), (0.6, 0.0))
    assert value == pytest.approx(geometry.point_origin_value(0.3), abs=1e-12)
    oracle = origin_value_from_distance(sampled_origin_distance((0.3, 0.0), (0.6, 0.0)))
    assert value == pytest.approx(oracle, abs=1e-6)


def test_geodesic_origin_symmetry_and_endpoint_bound():
    rng = np.random.default_rng(4)
    for _ in range(300):
        x, y = random_ball(rng, 3, 0.9), random_ball(rng, 3, 0.9)
        a = geometry.geodesic_origin_distance(x, y)
        assert a == pytest.approx(geometry.geodesic_origin_distance(y, x), abs=1e-9)
        assert a <= geometry.geodesic_origin_distance(x, x) + 1e-12
        assert a <= geometry.geodesic_origin_distance(y, y) + 1e-12


def test_degenerate_pair_is_continuous():
    x = np.array([0.4, 0.3])
    near = x + np.array([1e-7, -2e-7])
    assert geometry.geodesic_origin_distance(x, x) == pytest.approx(
        geometry.geodesic_origin_distance(x, near), abs=1e-6)


def test_geodesic_origin_rejects_outside_ball():
    with pytest.raises(geometry.GeometryError):
        geometry.geodesic_origin_distance((1.0, 0.0), (0.2, 0.1))


def test_torch_kernels_match_reference():
    rng = np.random.default_rng(5)
    X = np.stack([random_ball(rng, 3, 0.95) for _ in range(40)])
    Z = torch.as_tensor(X)
    L = manifold.lift(2 * Z / (1 - (Z * Z).sum(1, keepdim=True)))
    gram = manifold.pairwise_lca_depth(Z).numpy()
    lorentz = manifold.pairwise_lca_depth_lorentz(L).numpy()
    for i in range(40):
        for j in range(40):
            ref = geometry.geodesic_origin_distance(X[i], X[j])
            assert gram[i, j] == pytest.approx(ref, abs=1e-9)
            assert lorentz[i, j] == pytest.approx(ref, abs=1e-9)


def test_lorentz_form_stays_accurate_near_boundary():
    # points at Poincare radius 0.999999 with a small angle: the Gram form cancels, the Lorentz form does not
    angle = 1e-3
    r = 0.999999
    u = torch.tensor([[r, 0.0], [r * math.cos(angle), r * math.sin(angle)]], dtype=torch.float64)
    L = torch.stack([torch.as_tensor(geometry.poincare_to_lorentz(p.numpy())) for p in u])
    value = float(manifold.pairwise_lca_depth_lorentz(L)[0, 1])
    oracle = origin_value_from_distance(sampled_origin_distance(u[0].numpy(), u[1].numpy()))
    assert value == pytest.approx(oracle, rel=1e-6)


def test_origin_distance_matches_arccosh():
    rng = np.random.default_rng(6)
    for _ in range(20):
        x = random_lorentz(rng)
        d = float(manifold.origin_distance(torch.as_tensor(x)))
        assert d == pytest.approx(geometry.lorentz_distance(x, (1, 0, 0, 0)), abs=1e-9)
