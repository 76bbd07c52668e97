import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from src.exceptions import GraphValidationError

logger = logging.getLogger(__name__)

GAP_TOL = 1e-12
MAX_AUTO_DIM = 50
PARTIAL_MIN_DIM = 600


@dataclass(frozen=True)
class Embedding:
    """Stacked (m*n) x d adjacency spectral embedding with its signed eigenvalues."""

    Xhat: np.ndarray
    eigenvalues: np.ndarray
    m: int = 1

    @property
    def d(self):
        return self.Xhat.shape[1]

    @property
    def n(self):
        return self.Xhat.shape[0] // self.m

    def blocks(self):
        return extract_blocks(self, self.m, self.n)


def spectrum(M):
    """Eigenvalue magnitudes of a symmetric matrix, descending."""
    vals = linalg.eigh(np.asarray(M, dtype=float), eigvals_only=True)
    return np.sort(np.abs(vals))[::-1]


def _leading_eigenpairs(M, d):
    """Eigenpairs containing the top d+1 by magnitude: both ends of the spectrum, or all of it for small matrices."""
    dim = M.shape[0]
    if dim < PARTIAL_MIN_DIM or 2 * (d + 1) >= dim:
        return linalg.eigh(M)
    low_vals, low_vecs = linalg.eigh(M, subset_by_index=[0, d], driver="evr")
    high_vals, high_vecs = linalg.eigh(M, subset_by_index=[dim - d - 1, dim - 1], driver="evr")
    return np.concatenate([low_vals, high_vals]), np.hstack([low_vecs, high_vecs])


def ase(M, d, m=1):
    """Top-d eigenpairs by magnitude, scaled as U |S|^(1/2)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise GraphValidationError(f"embedding needs a square matrix, got shape {M.shape}")
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-10:
        raise GraphValidationError("embedding needs a symmetric matrix")
    dim = M.shape[0]
    if not 1 <= d <= dim:
        raise GraphValidationError(f"embedding dimension {d} outside 1..{dim}")
    if dim % m:
        raise GraphValidationError(f"matrix dimension {dim} is not a multiple of m={m}")

    vals, vecs = _leading_eigenpairs(M, d)
    order = np.argsort(-np.abs(vals), kind="stable")
    if d < dim and abs(abs(vals[order[d - 1]]) - abs(vals[order[d]])) <= GAP_TOL:
        msg = f"singular values {d} and {d + 1} coincide ({abs(vals[order[d - 1]]):.6g}), embedding subspace is not unique"
        logger.warning(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)

    top = order[:d]
    u = vecs[:, top]
    # largest-magnitude entry of each eigenvector is positive
    pivots = np.argmax(np.abs(u), axis=0)
    u = u * np.where(u[pivots, np.arange(d)] < 0, -1.0, 1.0)
    return Embedding(Xhat=u * np.sqrt(np.abs(vals[top])), eigenvalues=vals[top], m=m)


def _profile_loglik(x, q):
    g1, g2 = x[:q], x[q:]
    pooled = (np.sum((g1 - g1.mean()) ** 2) + np.sum((g2 - g2.mean()) ** 2)) / (x.size - 2)
    if pooled <= 0:
        return np.inf
    sd = np.sqrt(pooled)
    return stats.norm.logpdf(g1, g1.mean(), sd).sum() + stats.norm.logpdf(g2, g2.mean(), sd).sum()


def select_dim(spec, max_d=None, rank_hint=None):
    """Zhu-Ghodsi elbow: the split of the scree that maximizes the two-group profile likelihood."""
    x = np.sort(np.abs(np.asarray(spec, dtype=float)))[::-1]
    if max_d is None:
        max_d = min(x.size, MAX_AUTO_DIM, 3 * rank_hint) if rank_hint else min(x.size, MAX_AUTO_DIM)
    x = x[: max_d]
    if x.size < 3:
        raise ValueError(f"dimension selection needs at least 3 values, got {x.size}")
    loglik = np.array([_profile_loglik(x, q) for q in range(1, x.size)])
    d = int(np.argmax(loglik)) + 1
    logger.debug(f"elbow at d={d} over {x.size} values")
    return d


def extract_blocks(e, m, n):
    X = e.Xhat if isinstance(e, Embedding) else np.asarray(e)
    if X.shape[0] != m * n:
        raise GraphValidationError(f"embedding has {X.shape[0]} rows, expected m*n = {m * n}")
    return [X[s * n:(s + 1) * n] for s in range(m)]
