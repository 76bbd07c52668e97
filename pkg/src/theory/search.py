import logging
from dataclasses import dataclass

import numpy as np

from src.exceptions import ModelError
from src.theory.correlation_matrix import CorrelationMatrix
from src.workers import parallel_map, substream

logger = logging.getLogger(__name__)

SEARCH_KEY = 4
CHUNK_SIZE = 4096
GN_STEPS = 8


@dataclass(frozen=True)
class FlatSearchResult:
    trials: int
    n_flat: int
    best_r: float = None
    best_alpha: np.ndarray = None

    @property
    def found(self):
        return self.n_flat > 0


def _pair_derivative(m):
    """d alpha / d u for every upper-triangle pair weight u = alpha(i, k)."""
    pairs = list(zip(*np.triu_indices(m, 1)))
    deriv = np.zeros((len(pairs), m, m))
    for j, (i, k) in enumerate(pairs):
        deriv[j, i, k] += 1
        deriv[j, k, i] -= 1
        deriv[j, i, i] -= 1
        deriv[j, k, k] += 1
    return deriv


def _batch_alphas(u, m, rows, cols):
    alphas = np.zeros((u.shape[0], m, m))
    alphas[:, rows, cols] = u
    alphas[:, cols, rows] = 1.0 - u
    diag = m - alphas.sum(axis=2)
    alphas[:, np.arange(m), np.arange(m)] = diag
    return alphas


def _off_diagonal_correlations(alphas, R, rows, cols):
    m = alphas.shape[1]
    beta = alphas[:, rows, :] - alphas[:, cols, :]
    return beta, 1.0 - np.einsum("bpq,ql,bpl->bp", beta, R, beta) / (2.0 * m * m)


def _search_chunk(m, R, size, seed, chunk, tol, gn_steps):
    rng = substream(seed, SEARCH_KEY, chunk)
    rows, cols = np.triu_indices(m, 1)
    deriv = _pair_derivative(m)
    dbeta = deriv[:, rows, :] - deriv[:, cols, :]
    u = rng.random((size, rows.size))

    for _ in range(gn_steps):
        alphas = _batch_alphas(u, m, rows, cols)
        beta, r = _off_diagonal_correlations(alphas, R, rows, cols)
        jac = -np.einsum("bpq,ql,jpl->bpj", beta, R, dbeta) / (m * m)
        resid = r - r.mean(axis=1, keepdims=True)
        jac = jac - jac.mean(axis=1, keepdims=True)
        step = np.einsum("bjp,bp->bj", np.linalg.pinv(jac), resid)
        u = np.clip(u - step, 0.0, 1.0)

    alphas = _batch_alphas(u, m, rows, cols)
    _, r = _off_diagonal_correlations(alphas, R, rows, cols)
    gaps = np.diagonal(alphas, axis1=1, axis2=2)[:, :, None] - alphas
    gaps[:, np.arange(m), np.arange(m)] = np.inf
    dominant = gaps.min(axis=(1, 2)) > 0
    flat = np.max(np.abs(r - r.mean(axis=1, keepdims=True)), axis=1) <= tol
    keep = dominant & flat
    if not keep.any():
        return 0, None, None
    values = r.mean(axis=1)
    idx = np.flatnonzero(keep)[np.argmax(values[keep])]
    return int(keep.sum()), float(values[idx]), alphas[idx]


def random_search_flat_max(m, rho, trials, seed, tol=1e-3, gn_steps=GN_STEPS, n_jobs=None):
    """Largest flat induced correlation found among random WOMNI weightings.

    Candidates are pushed toward flatness by batched Gauss-Newton steps on the
    off-diagonal deviations before filtering; a flat candidate's value is the
    mean of its off-diagonal correlations.
    """
    if m not in (3, 4, 5):
        raise ModelError(f"random flat search supports m in 3..5, got m={m}")
    if trials < 1:
        raise ModelError("need at least one trial")
    R = CorrelationMatrix.flat(m, rho).values
    sizes = [CHUNK_SIZE] * (trials // CHUNK_SIZE)
    if trials % CHUNK_SIZE:
        sizes.append(trials % CHUNK_SIZE)

    results = parallel_map(
        lambda job: _search_chunk(m, R, job[1], seed, job[0], tol, gn_steps),
        list(enumerate(sizes)),
        n_jobs=n_jobs,
    )
    n_flat = sum(res[0] for res in results)
    found = [res for res in results if res[0]]
    if not found:
        logger.info(f"no flat configuration among {trials} trials (m={m}, rho={rho})")
        return FlatSearchResult(trials=trials, n_flat=0)
    best = max(found, key=lambda res: res[1])
    logger.info(f"flat search m={m} rho={rho}: {n_flat}/{trials} flat, best {best[1]:.6f}")
    return FlatSearchResult(trials=trials, n_flat=n_flat, best_r=best[1], best_alpha=best[2])
