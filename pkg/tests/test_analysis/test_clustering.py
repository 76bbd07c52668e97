import warnings

import numpy as np
import pytest
from scipy.spatial.distance import pdist, squareform

from src.analysis.clustering import (
    ari, cmds, cut_tree, pairwise_graph_distances, vertex_distance_matrix, ward_cluster,
)
from src.exceptions import GraphValidationError


def two_groups():
    points = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [5.0, 5.0], [5.1, 5.0]])
    return squareform(pdist(points))


def test_ward_separates_groups():
    dend = ward_cluster(two_groups())

    assert dend.m == 5
    assert np.all(np.diff(dend.heights) >= 0)
    labels = cut_tree(dend, 2)
    assert ari(labels, [1, 1, 1, 2, 2]) == 1.0


def test_merges_listing():
    merges = ward_cluster(two_groups()).merges()
    assert len(merges) == 4
    assert all(isinstance(a, int) and isinstance(h, float) for a, _, h in merges)


def test_cut_tree_bounds():
    dend = ward_cluster(two_groups())
    assert cut_tree(dend, 5).tolist() == [1, 2, 3, 4, 5]
    with pytest.raises(GraphValidationError):
        cut_tree(dend, 6)


def test_ari_length_mismatch():
    with pytest.raises(GraphValidationError):
        ari([1, 2], [1, 2, 3])


def test_bad_distance_matrix():
    with pytest.raises(GraphValidationError):
        ward_cluster(np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_cmds_recovers_line_up_to_sign_and_shift():
    x = np.array([0.0, 1.0, 3.0, 7.0])
    D = np.abs(x[:, None] - x[None, :])

    coords, scree = cmds(D, 1)

    centered = x - x.mean()
    assert np.allclose(coords[:, 0], centered) or np.allclose(coords[:, 0], -centered)
    assert np.all(np.diff(scree) <= 1e-12)


def test_cmds_reconstructs_planar_configuration(rng):
    points = rng.normal(size=(8, 2))
    D = squareform(pdist(points))

    coords, _ = cmds(D, 2)

    assert np.max(np.abs(squareform(pdist(coords)) - D)) <= 1e-10


def test_cmds_pads_missing_dimensions():
    x = np.array([0.0, 1.0, 2.0])
    D = np.abs(x[:, None] - x[None, :])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        coords, _ = cmds(D, 2)
    assert np.all(coords[:, 1] == 0)
    assert any("padding" in str(w.message) for w in caught)


def test_graph_and_vertex_distances():
    blocks = [np.zeros((3, 2)), np.ones((3, 2))]
    D = pairwise_graph_distances(blocks)
    assert D[0, 1] == pytest.approx(np.sqrt(6))

    V = vertex_distance_matrix(np.array([[0.0, 0.0], [3.0, 4.0]]))
    np.testing.assert_allclose(V, [[0.0, 5.0], [5.0, 0.0]])


def test_ward_heights_follow_lance_williams():
    x = np.array([0.0, 1.0, 4.0, 10.0])
    D = np.abs(x[:, None] - x[None, :])

    dend = ward_cluster(D)

    # {0,1} at 1; then {0,1,4} at sqrt(49/3); then everything at sqrt(625/6)
    np.testing.assert_allclose(dend.heights, [1.0, np.sqrt(49 / 3), np.sqrt(625 / 6)], rtol=1e-12)
    assert sorted(dend.merges()[0][:2]) == [0, 1]


def test_cut_tree_gives_exactly_k_clusters(rng):
    dend = ward_cluster(vertex_distance_matrix(rng.normal(size=(12, 3))))

    for k in range(1, 13):
        labels = cut_tree(dend, k)
        assert sorted(np.unique(labels).tolist()) == list(range(1, k + 1))


def test_ari_ignores_label_names(rng):
    a = rng.integers(0, 4, size=30)
    b = rng.integers(0, 4, size=30)
    renamed = np.array([10, 3, 7, 1])[a]

    assert ari(a, renamed) == pytest.approx(1.0)
    assert ari(a, a) == pytest.approx(1.0)
    assert ari(renamed, b) == pytest.approx(ari(a, b))


def test_ari_of_random_partitions_averages_zero(rng):
    scores = [ari(rng.integers(0, 3, size=30), rng.integers(0, 3, size=30)) for _ in range(1000)]
    assert abs(np.mean(scores)) <= 0.02
