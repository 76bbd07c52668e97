import numpy as np
import pytest

from src.exceptions import GraphValidationError
from src.omni.omnibus import build_omnibus
from src.omni.weights import classical_omni, special


def test_classical_blocks_are_pair_averages(small_collection):
    M = build_omnibus(small_collection, classical_omni(3))
    n = small_collection.n
    a = small_collection.graphs

    assert M.shape == (3 * n, 3 * n)
    np.testing.assert_array_equal(M[:n, :n], a[0])
    np.testing.assert_allclose(M[:n, n:2 * n], (a[0] + a[1]) / 2)
    np.testing.assert_allclose(M[2 * n:, n:2 * n], (a[1] + a[2]) / 2)


def test_omnibus_is_exactly_symmetric(small_collection):
    M = build_omnibus(small_collection, special("M3minus", 3))
    assert np.array_equal(M, M.T)


def test_m3minus_blocks(small_collection):
    M = build_omnibus(small_collection, special("M3minus", 3))
    n = small_collection.n

    # block (1,2) carries graph 1 only, block (2,3) graph 2 only
    np.testing.assert_array_equal(M[:n, n:2 * n], small_collection.graphs[0])
    np.testing.assert_array_equal(M[n:2 * n, 2 * n:], small_collection.graphs[1])


def test_weight_size_mismatch(small_collection):
    with pytest.raises(GraphValidationError, match="m=4"):
        build_omnibus(small_collection, classical_omni(4))
