import json

import numpy as np
import pytest

from src.exceptions import GraphValidationError
from src.graphs.store import (
    GraphCollection, MatrixFormat, PreprocessOptions, load_collection, load_matrix, preprocess, save_collection,
    save_matrix,
)


def path_graph(n):
    a = np.zeros((n, n))
    for i in range(n - 1):
        a[i, i + 1] = a[i + 1, i] = 1.0
    return a


def test_collection_defaults_vertex_ids():
    c = GraphCollection(graphs=(path_graph(4), path_graph(4)))
    assert c.m == 2
    assert c.n == 4
    assert c.vertex_ids == ("1", "2", "3", "4")


def test_collection_is_read_only():
    c = GraphCollection(graphs=(path_graph(3),))
    with pytest.raises(ValueError):
        c.graphs[0][0, 1] = 5.0


def test_collection_rejects_asymmetric():
    a = path_graph(3)
    a[0, 2] = 1.0
    with pytest.raises(GraphValidationError, match="graph 1 is asymmetric"):
        GraphCollection(graphs=(a,))


def test_collection_rejects_size_mismatch():
    with pytest.raises(GraphValidationError, match="graph 2 has 4 vertices"):
        GraphCollection(graphs=(path_graph(3), path_graph(4)))


def test_dense_csv_directory(tmp_path):
    save_collection(GraphCollection(graphs=(path_graph(4), path_graph(4))), tmp_path)

    c = load_collection(tmp_path)

    assert c.m == 2
    np.testing.assert_array_equal(c.graphs[1], path_graph(4))


def test_load_rejects_shape_mismatch(tmp_path):
    save_matrix(path_graph(3), tmp_path / "a.csv")
    save_matrix(path_graph(4), tmp_path / "b.csv")
    with pytest.raises(GraphValidationError, match="dimension mismatch"):
        load_collection(tmp_path)


def test_load_rejects_asymmetric_file(tmp_path):
    a = path_graph(3)
    a[0, 2] = 0.5
    np.savetxt(tmp_path / "g.csv", a, delimiter=",")
    with pytest.raises(GraphValidationError, match=r"asymmetric at \(1,3\)"):
        load_collection(tmp_path)


def test_load_symmetrize_takes_max(tmp_path):
    a = path_graph(3)
    a[0, 2] = 1.0
    np.savetxt(tmp_path / "g.csv", a, delimiter=",")

    c = load_collection(tmp_path, symmetrize=True)

    assert c.graphs[0][2, 0] == 1.0


def test_load_zeroes_diagonal(tmp_path):
    a = path_graph(3)
    a[1, 1] = 1.0
    np.savetxt(tmp_path / "g.csv", a, delimiter=",")

    c = load_collection(tmp_path)

    assert np.all(np.diag(c.graphs[0]) == 0)


def test_edge_lists_share_union_vertex_set(tmp_path):
    (tmp_path / "a.txt").write_text("# comment\n1 2\n2 3\n")
    (tmp_path / "b.txt").write_text("3 10 0.5\n")

    c = load_collection(tmp_path, MatrixFormat.EDGE_LIST)

    assert c.vertex_ids == ("1", "2", "3", "10")
    assert c.graphs[0][0, 1] == 1.0
    assert c.graphs[1][2, 3] == 0.5
    assert c.graphs[1].sum() == 1.0


def test_empty_directory(tmp_path):
    with pytest.raises(GraphValidationError, match="no dense-csv files"):
        load_collection(tmp_path)


def test_preprocess_drop_isolated_keeps_vertex_with_any_edge():
    a = np.zeros((4, 4))
    a[0, 1] = a[1, 0] = 1.0
    b = np.zeros((4, 4))
    b[1, 2] = b[2, 1] = 1.0
    c = GraphCollection(graphs=(a, b))

    out = preprocess(c, PreprocessOptions(drop_isolated=True))

    assert out.vertex_ids == ("1", "2", "3")
    assert out.n == 3


def test_preprocess_intersect_reaches_fixed_point():
    a = path_graph(4)
    b = path_graph(4)
    b[2, 3] = b[3, 2] = 0.0
    c = GraphCollection(graphs=(a, b))

    out = preprocess(c, PreprocessOptions(intersect_vertices=True))

    assert out.vertex_ids == ("1", "2", "3")


def test_preprocess_binarize():
    a = 0.3 * path_graph(3)
    out = preprocess(GraphCollection(graphs=(a,)), PreprocessOptions(binarize=True))
    np.testing.assert_array_equal(out.graphs[0], path_graph(3))


def test_preprocess_removing_everything():
    c = GraphCollection(graphs=(np.zeros((3, 3)),))
    with pytest.raises(GraphValidationError, match="removed every vertex"):
        preprocess(c, PreprocessOptions(drop_isolated=True))


def test_json_tensor_payload(tmp_path):
    x = np.arange(8, dtype=float).reshape(2, 2, 2)

    save_matrix(x, tmp_path / "c.json", MatrixFormat.JSON_TENSOR, is_womni=False)

    payload = json.loads((tmp_path / "c.json").read_text())
    assert payload["axes"] == ["k", "l", "q"]
    assert payload["shape"] == [2, 2, 2]
    assert payload["is_womni"] is False
    np.testing.assert_array_equal(load_matrix(tmp_path / "c.json", MatrixFormat.JSON_TENSOR), x)


def test_csv_keeps_full_precision(tmp_path):
    x = np.array([[1 / 3, 2 / 3]])
    save_matrix(x, tmp_path / "x.csv")
    assert np.array_equal(load_matrix(tmp_path / "x.csv"), x)


def test_save_refuses_nan(tmp_path):
    with pytest.raises(GraphValidationError):
        save_matrix(np.array([[np.nan]]), tmp_path / "x.csv")


def test_edge_list_example(tmp_path):
    (tmp_path / "g.txt").write_text("1 2\n2 3")

    c = load_collection(tmp_path, MatrixFormat.EDGE_LIST)

    assert c.vertex_ids == ("1", "2", "3")
    np.testing.assert_array_equal(c.graphs[0], path_graph(3))


def sparse_weighted_collection(rng):
    graphs = []
    for _ in range(3):
        w = np.triu(rng.uniform(0.1, 2.0, size=(12, 12)) * (rng.random((12, 12)) < 0.4), 1)
        w[:, 11] = 0.0
        graphs.append(w + w.T)
    return GraphCollection(graphs=tuple(graphs))


@pytest.mark.parametrize("opts", [
    PreprocessOptions(binarize=True),
    PreprocessOptions(drop_isolated=True),
    PreprocessOptions(intersect_vertices=True),
    PreprocessOptions(binarize=True, symmetrize=True, drop_isolated=True, intersect_vertices=True),
])
def test_preprocess_is_idempotent(rng, opts):
    c = sparse_weighted_collection(rng)

    once = preprocess(c, opts)
    twice = preprocess(once, opts)

    assert twice.vertex_ids == once.vertex_ids
    assert twice.m == c.m
    assert once.n <= c.n
    for a, b in zip(once.graphs, twice.graphs):
        np.testing.assert_array_equal(a, b)
