import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.cluster import hierarchy
from scipy.spatial.distance import pdist, squareform
from sklearn.metrics import adjusted_rand_score

from src.exceptions import GraphValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dendrogram:
    """scipy linkage matrix: row t merges clusters Z[t, 0] and Z[t, 1] at height Z[t, 2]."""

    Z: np.ndarray
    linkage: str = "ward.D2"

    @property
    def m(self):
        return self.Z.shape[0] + 1

    @property
    def heights(self):
        return self.Z[:, 2]

    def merges(self):
        return [(int(a), int(b), float(h)) for a, b, h, _ in self.Z]


def vertex_distance_matrix(X):
    """Euclidean distances between the rows of an embedding block or adjacency matrix."""
    return squareform(pdist(np.asarray(X, dtype=float)))


def pairwise_graph_distances(blocks):
    """Frobenius distance between every pair of embedding blocks."""
    shapes = {np.shape(b) for b in blocks}
    if len(shapes) != 1:
        raise GraphValidationError(f"blocks differ in shape: {sorted(shapes)}")
    flat = np.stack([np.asarray(b, dtype=float).ravel() for b in blocks])
    return squareform(pdist(flat))


def _check_distances(D):
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise GraphValidationError(f"distance matrix must be square, got {D.shape}")
    if np.max(np.abs(D - D.T), initial=0.0) > 1e-10 or np.any(np.diag(D) != 0) or D.min(initial=0.0) < 0:
        raise GraphValidationError("distance matrix must be symmetric, nonnegative and zero on the diagonal")
    return (D + D.T) / 2


def ward_cluster(D):
    # scipy's ward on a condensed Euclidean distance matrix is Lance-Williams on squared distances
    D = _check_distances(D)
    if D.shape[0] < 2:
        raise GraphValidationError("clustering needs at least two items")
    Z = hierarchy.linkage(squareform(D, checks=False), method="ward")
    return Dendrogram(Z=Z)


def cut_tree(dend, k):
    if not 1 <= k <= dend.m:
        raise GraphValidationError(f"cluster count {k} outside 1..{dend.m}")
    return hierarchy.cut_tree(dend.Z, n_clusters=k).ravel() + 1


def ari(a, b):
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise GraphValidationError(f"partitions differ in length: {a.size} vs {b.size}")
    return float(adjusted_rand_score(a, b))


def cmds(D, k):
    """Classical MDS: top-k coordinates of the double-centered squared distances, plus the full scree.

    Returns (coords, scree). Missing positive eigenvalues are padded with zero columns.
    """
    D = _check_distances(D)
    n = D.shape[0]
    H = np.eye(n) - np.ones((n, n)) / n
    B = -H @ (D ** 2) @ H / 2
    evals, evecs = np.linalg.eigh((B + B.T) / 2)
    idx = np.argsort(evals)[::-1]
    evals, evecs = evals[idx], evecs[:, idx]

    positive = int(np.sum(evals[:k] > 1e-12 * max(1.0, abs(evals[0]))))
    coords = np.zeros((n, k))
    coords[:, :positive] = evecs[:, :positive] * np.sqrt(evals[:positive])
    if positive < k:
        msg = f"only {positive} positive eigenvalues for k={k}, padding with zeros"
        logger.warning(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return coords, evals
