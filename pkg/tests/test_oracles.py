import numpy as np
import pytest

from hypcse import geometry, oracles
from hypcse.entropy import lca


def test_random_graphs_are_connected_with_positive_weights():
    rng = np.random.default_rng(0)
    for n in range(2, 10):
        G = oracles.random_graph(n, rng)
        assert G.is_connected() and np.all(G.weights > 0)


def test_random_trees_have_no_unary_nodes():
    rng = np.random.default_rng(1)
    for n in range(1, 10):
        T = oracles.random_partition_tree(n, rng)
        assert T.num_leaves == n
        kids = np.bincount(T.parent[T.parent >= 0], minlength=T.num_nodes)
        internal = np.setdiff1d(np.arange(T.num_nodes), T.leaf_of)
        assert np.all(kids[internal] >= 2)


def test_sampling_oracle_on_a_diameter_and_a_known_pair():
    x, y = np.array([0.5, 0.0]), np.array([-0.3, 0.0])
    assert oracles.sampled_origin_distance(x, y) == pytest.approx(0.0, abs=1e-6)
    value = oracles.origin_value_from_distance(oracles.sampled_origin_distance([0.5, 0.0], [0.0, 0.5]))
    assert value == pytest.approx(0.16582355435, abs=1e-9)


def test_mobius_addition_inverse():
    x = np.array([0.3, -0.4])
    assert np.allclose(oracles.mobius_add(-x, x), 0.0, atol=1e-15)


def test_random_pairs_avoid_degeneracies():
    rng = np.random.default_rng(2)
    for dim in (2, 3, 4):
        x, y = oracles.random_poincare_pair(rng, dim)
        assert np.linalg.norm(x) < 0.9 + 1e-12 and np.linalg.norm(y) < 0.9 + 1e-12
        cos = x @ y / np.linalg.norm(x) / np.linalg.norm(y)
        assert abs(cos) < 1.0 - 1e-6


def test_hard_limit_instance_realizes_its_tree():
    G, T, points = oracles.hard_limit_instance()
    depth = T.depth
    for i, j, _ in G.edges():
        d_ij = geometry.geodesic_origin_distance(points[i], points[j])
        under = T.vertex_set(lca(T, i, j))
        for k in set(range(6)) - {i, j}:
            d_ik = geometry.geodesic_origin_distance(points[i], points[k])
            d_jk = geometry.geodesic_origin_distance(points[j], points[k])
            assert (min(d_ik, d_jk) > d_ij) == (k in under)
    assert depth[T.root] == 0


def test_relative_error_floor():
    assert oracles.relative_error(0.0, 0.0) == 0.0
    assert oracles.relative_error(1.0, 1.1) == pytest.approx(0.1 / 1.1)


def test_small_gradient_check_passes():
    result = oracles.check_gradients(draws=3)
    assert result.passed and result.checked == 3


def test_summary_and_registry():
    result = oracles.run_check("hard_limit")
    assert result.summary().startswith("PASS hard_limit")
    with pytest.raises(KeyError):
        oracles.run_check("lemma9")
