import numpy as np
from scipy.linalg import orthogonal_procrustes

from src.exceptions import ModelError
from src.theory.correlation_matrix import CorrelationMatrix, CorrelationRole


def procrustes_residuals(blocks, reference):
    """Blocks minus the reference latent positions under one rotation fitted on all blocks at once."""
    reference = np.asarray(reference, dtype=float)
    stacked = np.vstack(blocks)
    if reference.shape != np.shape(blocks[0]):
        raise ModelError(f"reference shape {reference.shape} does not match block shape {np.shape(blocks[0])}")
    Q, _ = orthogonal_procrustes(np.tile(reference, (len(blocks), 1)), stacked)
    aligned = reference @ Q
    return [np.asarray(b, dtype=float) - aligned for b in blocks]


def empirical_block_correlation(blocks, reference=None):
    """Pearson correlation between the flattened, per-dimension centered blocks.

    With a reference the correlation is taken between estimation errors rather
    than between the raw blocks.
    """
    if len(blocks) < 2:
        raise ModelError("block correlation needs at least two blocks")
    if reference is not None:
        blocks = procrustes_residuals(blocks, reference)
    flat = np.stack([(b - np.mean(b, axis=0)).ravel() for b in blocks])
    norms = np.linalg.norm(flat, axis=1)
    if np.any(norms == 0):
        bad = int(np.flatnonzero(norms == 0)[0]) + 1
        raise ModelError(f"block {bad} has zero variance")
    values = np.clip((flat @ flat.T) / np.outer(norms, norms), -1.0, 1.0)
    np.fill_diagonal(values, 1.0)
    return CorrelationMatrix(values, CorrelationRole.INDUCED)


def scaled_difference_covariance(blocks, pair, n=None, rows=None):
    """Diagonal covariance of sqrt(n) (X^(s1)_i - X^(s2)_i) over the rows i (all rows, or only `rows`).

    `blocks` is one list of n x d blocks or a list of such lists (Monte-Carlo
    replicates), in which case rows from every replicate are pooled.
    """
    replicates = blocks if isinstance(blocks[0], (list, tuple)) else [blocks]
    s1, s2 = pair
    diffs = []
    for reps in replicates:
        if not (0 <= s1 < len(reps) and 0 <= s2 < len(reps)) or s1 == s2:
            raise ModelError(f"invalid block pair ({s1 + 1}, {s2 + 1}) for {len(reps)} blocks")
        a, b = np.asarray(reps[s1], dtype=float), np.asarray(reps[s2], dtype=float)
        scale = np.sqrt(a.shape[0] if n is None else n)
        diff = scale * (a - b)
        diffs.append(diff if rows is None else diff[list(rows)])
    diffs = np.vstack(diffs)
    if diffs.shape[0] < 2:
        raise ModelError("need at least two rows to estimate a covariance")
    return np.diag(np.var(diffs, axis=0, ddof=1))
