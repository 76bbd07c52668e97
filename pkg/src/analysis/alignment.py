import logging
from math import comb

import numpy as np

from src.exceptions import GraphValidationError
from src.theory.correlation_matrix import CorrelationMatrix, CorrelationRole

logger = logging.getLogger(__name__)


def alignment_strength(A, B):
    """1 - ||A - B||_F^2 / E_P ||A - P B P'||_F^2 with P a uniformly random permutation.

    The expectation has the closed form ||A||^2 + ||B||^2 - 2 tr(A) tr(B) / n
    - s(A) s(B) / C(n, 2), where s is the sum of off-diagonal entries.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise GraphValidationError(f"alignment strength needs two n x n matrices, got {A.shape} and {B.shape}")
    n = A.shape[0]
    if n < 2:
        raise GraphValidationError("alignment strength needs at least two vertices")
    diag_a, diag_b = np.trace(A), np.trace(B)
    hollow_a, hollow_b = A.sum() - diag_a, B.sum() - diag_b
    denom = (np.sum(A * A) + np.sum(B * B) - 2 * diag_a * diag_b / n - hollow_a * hollow_b / comb(n, 2))
    if abs(denom) <= 1e-15:
        raise GraphValidationError("alignment strength is undefined: permutation-averaged distance is zero")
    return float(1.0 - np.sum((A - B) ** 2) / denom)


def alignment_strength_matrix(c, role=CorrelationRole.TARGET):
    """Pairwise alignment strengths of a collection, as a correlation matrix."""
    m = c.m
    values = np.eye(m)
    for i, j in zip(*np.triu_indices(m, 1)):
        values[i, j] = values[j, i] = alignment_strength(c.graphs[i], c.graphs[j])
    if values.min() < -1:
        logger.warning(f"alignment strength {values.min():.4f} below -1 clipped")
    return CorrelationMatrix(np.clip(values, -1.0, 1.0), role)
