import itertools

import numpy as np
import pytest

from src.analysis.alignment import alignment_strength, alignment_strength_matrix
from src.exceptions import GraphValidationError
from src.graphs.store import GraphCollection
from src.theory.correlation_matrix import CorrelationRole


def random_hollow(rng, n):
    while True:
        upper = np.triu((rng.random((n, n)) < 0.5).astype(float), 1)
        if upper.any():
            return upper + upper.T


def exhaustive_strength(A, B):
    n = A.shape[0]
    perms = list(itertools.permutations(range(n)))
    spread = sum(np.sum((A - np.eye(n)[list(p)] @ B @ np.eye(n)[list(p)].T) ** 2) for p in perms) / len(perms)
    return 1 - np.sum((A - B) ** 2) / spread


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_closed_form_matches_permutation_average(rng, n):
    worst = 0.0
    for _ in range(5):
        A, B = random_hollow(rng, n), random_hollow(rng, n)
        try:
            closed = alignment_strength(A, B)
        except GraphValidationError:
            continue
        worst = max(worst, abs(closed - exhaustive_strength(A, B)))
    assert worst <= 1e-12


def test_identical_graphs_have_strength_one():
    A = np.zeros((5, 5))
    for i in range(4):
        A[i, i + 1] = A[i + 1, i] = 1.0
    B = np.zeros((5, 5))
    B[0, 1:] = B[1:, 0] = 1.0

    assert alignment_strength(A, A) == pytest.approx(1.0)
    assert alignment_strength(A, B) < 1.0


def test_undefined_for_complete_graphs():
    K = np.ones((4, 4)) - np.eye(4)
    with pytest.raises(GraphValidationError, match="undefined"):
        alignment_strength(K, K)


def test_strength_matrix_role(small_collection):
    R = alignment_strength_matrix(small_collection)

    assert R.role is CorrelationRole.TARGET
    assert R.m == 3
    np.testing.assert_allclose(np.diag(R.values), 1.0)
    assert R.values[0, 1] == pytest.approx(alignment_strength(small_collection.graphs[0], small_collection.graphs[1]))


def test_strength_matrix_of_copies(small_collection):
    g = small_collection.graphs[0]
    R = alignment_strength_matrix(GraphCollection(graphs=(g, g)))
    assert R.values[0, 1] == pytest.approx(1.0)
