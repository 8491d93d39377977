import numpy as np
import pytest

from hypcse.oracles import random_partition_tree
from hypcse.trees import Dendrogram, PartitionTree, TreeError, parse_newick


def test_from_nested_and_back():
    T = PartitionTree.from_nested(((0, 1), (2, (3, 4))))
    assert T.num_leaves == 5
    assert T.is_binary()
    assert PartitionTree.from_nested(T.to_nested()).to_nested() == T.to_nested()


def test_partition_tree_rejects_bad_structures():
    with pytest.raises(TreeError):
        PartitionTree.from_nested((0, 0))
    with pytest.raises(TreeError):
        PartitionTree.from_nested((0, 2))
    with pytest.raises(TreeError):
        PartitionTree(np.array([-1, -1]), np.array([0, 1]))


def test_dendrogram_validation():
    with pytest.raises(TreeError):
        Dendrogram(3, [[0, 1]])
    with pytest.raises(TreeError):
        Dendrogram(3, [[0, 1], [0, 3]])
    with pytest.raises(TreeError):
        Dendrogram(1, np.zeros((0, 2)))


def test_dendrogram_partition_round_trip():
    D = Dendrogram(4, [[0, 1], [2, 3], [4, 5]])
    T = D.to_partition_tree()
    assert Dendrogram.from_partition_tree(T).structure() == D.structure()
    assert D.sizes[-1] == 4


def test_structure_ignores_child_order():
    a = Dendrogram(3, [[0, 1], [2, 3]])
    b = Dendrogram(3, [[1, 0], [3, 2]])
    assert a.structure() == b.structure()


def test_newick_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(30):
        T = random_partition_tree(7, rng, max_children=2)
        D = Dendrogram.from_partition_tree(T)
        parsed, labels = parse_newick(D.to_newick())
        assert labels == [str(i) for i in range(7)]
        assert Dendrogram.from_partition_tree(parsed).structure() == D.structure()


def test_newick_with_names_and_lengths():
    T, labels = parse_newick("((a:0.1,b:0.2)x:0.5,c);", names=["a", "b", "c"])
    assert T.to_nested() == ((0, 1), 2)
    assert labels == ["a", "b", "c"]


def test_newick_errors():
    with pytest.raises(TreeError):
        parse_newick("((0,1),2")
    with pytest.raises(TreeError):
        parse_newick("((0,1),);")


def test_merges_json_round_trip():
    D = Dendrogram(4, [[2, 3], [0, 4], [1, 5]])
    assert Dendrogram.from_merges_json(D.merges_json()).structure() == D.structure()
    assert D.merges_json() == "[[2, 3, 4], [0, 4, 5], [1, 5, 6]]"
