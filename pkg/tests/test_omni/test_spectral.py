import warnings

import numpy as np
import pytest

from src.exceptions import GraphValidationError
from src.omni.spectral import ase, extract_blocks, select_dim, spectrum


def test_ase_recovers_low_rank_matrix(rng):
    X = rng.random((20, 2))
    M = X @ X.T

    e = ase(M, 2)

    np.testing.assert_allclose(e.Xhat @ e.Xhat.T, M, atol=1e-10)
    assert e.eigenvalues[0] >= e.eigenvalues[1] > 0


def test_ase_sign_convention(rng):
    X = rng.random((15, 3))
    e = ase(X @ X.T, 2)
    pivots = np.argmax(np.abs(e.Xhat), axis=0)
    assert np.all(e.Xhat[pivots, np.arange(2)] > 0)


def test_ase_orders_by_magnitude():
    M = np.diag([1.0, -5.0, 3.0])
    e = ase(M, 2)
    np.testing.assert_allclose(e.eigenvalues, [-5.0, 3.0])


def test_ase_warns_on_tied_eigenvalues():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ase(np.eye(4), 2)
    assert any("not unique" in str(w.message) for w in caught)


def test_ase_bad_dimension():
    with pytest.raises(GraphValidationError, match="outside 1..3"):
        ase(np.eye(3), 4)


def test_blocks_split_rows(rng):
    X = rng.random((12, 2))
    e = ase(X @ X.T, 2, m=3)

    blocks = e.blocks()

    assert len(blocks) == 3
    assert all(b.shape == (4, 2) for b in blocks)
    np.testing.assert_array_equal(np.vstack(blocks), e.Xhat)
    with pytest.raises(GraphValidationError):
        extract_blocks(e, 5, 4)


def test_spectrum_descending_magnitudes():
    s = spectrum(np.diag([2.0, -7.0, 0.5]))
    np.testing.assert_allclose(s, [7.0, 2.0, 0.5])


def test_select_dim_finds_elbow():
    spec = np.array([100.0, 95.0, 90.0, 1.2, 1.1, 1.0, 0.9, 0.8, 0.7, 0.6])
    assert select_dim(spec) == 3


def test_select_dim_needs_three_values():
    with pytest.raises(ValueError):
        select_dim([3.0, 1.0])


def full_ase(M, d):
    vals, vecs = np.linalg.eigh(M)
    top = np.argsort(-np.abs(vals), kind="stable")[:d]
    u = vecs[:, top]
    pivots = np.argmax(np.abs(u), axis=0)
    u = u * np.where(u[pivots, np.arange(d)] < 0, -1.0, 1.0)
    return u * np.sqrt(np.abs(vals[top]))


def test_large_matrix_matches_full_decomposition(rng):
    X = rng.random((700, 2))
    noise = rng.normal(scale=0.01, size=(700, 700))
    M = X @ X.T + (noise + noise.T) / 2

    np.testing.assert_allclose(ase(M, 2).Xhat, full_ase(M, 2), atol=1e-8)


def test_frobenius_tail(rng):
    B = rng.normal(size=(60, 60))
    M = (B + B.T) / 2
    e = ase(M, 5)

    signed = e.Xhat @ np.diag(np.sign(e.eigenvalues)) @ e.Xhat.T
    tail = np.sort(np.abs(np.linalg.eigvalsh(M)))[::-1][5:]

    assert np.linalg.norm(M - signed) ** 2 == pytest.approx(np.sum(tail ** 2), rel=1e-10)


@pytest.mark.parametrize("c", [1e-3, 7.0, 1e4])
def test_select_dim_scale_invariant(c):
    spec = np.array([100.0, 95.0, 90.0, 1.2, 1.1, 1.0, 0.9, 0.8, 0.7, 0.6])
    assert select_dim(c * spec) == select_dim(spec)


def test_select_dim_two_large_values():
    assert select_dim([10.0, 9.5, 0.1, 0.09, 0.08]) == 2


def test_select_dim_constant_spectrum():
    assert select_dim(np.ones(6)) == 1
