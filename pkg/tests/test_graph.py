import math

import numpy as np
import pytest

from hypcse.graph import (GraphError, WeightedGraph, build_knn_graph, conductance, cut, standardize,
                          subgraph_sample, volume)
from hypcse.oracles import random_graph


def triangle():
    return WeightedGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])


def path3():
    return WeightedGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])


def test_graph_invariants_are_enforced():
    with pytest.raises(GraphError):
        WeightedGraph(3, [1], [1], [1.0])
    with pytest.raises(GraphError):
        WeightedGraph(3, [0, 0], [1, 1], [1.0, 2.0])
    with pytest.raises(GraphError):
        WeightedGraph(3, [0], [1], [0.0])
    with pytest.raises(GraphError):
        WeightedGraph(2, [0], [2], [1.0])


def test_degrees_and_volume():
    G = triangle()
    assert volume(G, [0, 1, 2]) == 6.0
    assert volume(G, [0]) == 2.0
    assert volume(G, []) == 0.0
    rng = np.random.default_rng(0)
    for _ in range(20):
        H = random_graph(6, rng)
        assert H.total_volume == pytest.approx(2.0 * H.weights.sum(), abs=1e-9)


def test_cut_examples():
    G = triangle()
    assert cut(G, [0]) == 2.0
    assert cut(G, [0, 1, 2]) == 0.0
    assert cut(G, []) == 0.0
    assert cut(path3(), [1]) == 2.0


def test_knn_kernel_values():
    G = build_knn_graph(np.array([[0.0, 0.0], [0.0, 0.0]]), k=1, standardize_features=False)
    assert G.edges() == [(0, 1, 1.0)]
    G = build_knn_graph(np.array([[0.0, 0.0], [1.0, 1.0]]), k=1, sigma=1.0, standardize_features=False)
    assert G.weights[0] == pytest.approx(math.exp(-1.0), abs=1e-12)


def test_knn_saturates_to_complete_graph():
    X = np.random.default_rng(1).normal(size=(7, 3))
    G = build_knn_graph(X, k=10)
    assert G.num_edges == 21


def test_knn_edge_count_bounds_and_symmetry():
    X = np.random.default_rng(2).normal(size=(60, 4))
    G = build_knn_graph(X, k=5)
    assert 5 * 60 / 2 <= G.num_edges <= 5 * 60
    A = G.dense()
    assert np.array_equal(A, A.T)
    assert np.all(np.diag(A) == 0)


def test_knn_identical_rows_give_unit_weights():
    G = build_knn_graph(np.ones((4, 2)), k=3)
    assert G.num_edges == 6
    assert np.allclose(G.weights, 1.0)


def test_standardize_handles_constant_columns():
    X = np.array([[1.0, 5.0], [3.0, 5.0]])
    Y = standardize(X)
    assert np.allclose(Y[:, 0], [-1.0, 1.0])
    assert np.allclose(Y[:, 1], 0.0)


def test_conductance_examples():
    assert conductance(path3()) == pytest.approx(1.0)
    assert conductance(triangle()) == pytest.approx(1.0)
    bridge = WeightedGraph.from_edges(6, [(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1),
                                          (3, 5, 1), (2, 3, 1)])
    assert conductance(bridge) == pytest.approx(1.0 / 7.0)


def test_conductance_matches_direct_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(20):
        G = random_graph(int(rng.integers(2, 8)), rng)
        best = math.inf
        for mask in range(1, 2 ** G.n - 1):
            S = [v for v in range(G.n) if mask >> v & 1]
            vs = volume(G, S)
            best = min(best, cut(G, S) / min(vs, G.total_volume - vs))
        assert conductance(G) == pytest.approx(best, abs=1e-12)
        assert 0.0 < conductance(G) <= 1.0


def test_conductance_of_disconnected_graph_warns():
    G = WeightedGraph.from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)])
    with pytest.warns(UserWarning):
        assert conductance(G) == 0.0


def test_subgraph_sampling_partition_property():
    X = np.random.default_rng(4).normal(size=(100, 3))
    G = build_knn_graph(X, k=5)
    subs = subgraph_sample(G, 30, 4, 7)
    assert len(subs) == 3
    ids = np.concatenate([s.ids for s in subs])
    assert all(s.n == 30 for s in subs)
    assert np.unique(ids).size == ids.size
    again = subgraph_sample(G, 30, 4, 7)
    assert all(np.array_equal(a.ids, b.ids) for a, b in zip(subs, again))


def test_subgraph_sampling_saturates():
    G = triangle()
    (only,) = subgraph_sample(G, 5, 1, 0)
    assert only.n == 3 and only.edges() == G.edges()


def test_subgraph_sampling_validates_sizes():
    with pytest.raises(GraphError):
        subgraph_sample(triangle(), 2, 3, 0)


def test_induced_subgraph_keeps_inner_edges():
    G = path3()
    H = G.induced_subgraph([1, 2])
    assert H.edges() == [(0, 1, 1.0)]
    assert list(H.ids) == [1, 2]
