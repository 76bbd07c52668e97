import logging
from dataclasses import dataclass

import numpy as np

from src.exceptions import ModelError
from src.theory.correlation_matrix import CorrelationMatrix, CorrelationRole

logger = logging.getLogger(__name__)

DIAG_SUM_TOL = 1e-10


@dataclass(frozen=True)
class FlatCheck:
    is_flat: bool
    value: float
    max_dev: float


def _values(R):
    return R.values if isinstance(R, CorrelationMatrix) else np.asarray(R, dtype=float)


def beta_vector(alpha, s1, s2):
    """beta_q = alpha(s1, q) - alpha(s2, q); sums to zero for any valid row-sum matrix."""
    alpha = np.asarray(alpha, dtype=float)
    return alpha[s1] - alpha[s2]


def induced_correlation(alpha, R):
    """Limiting correlation between a vertex's embedded positions in graphs s1 and s2:

        r(s1, s2) = 1 - beta' R beta / (2 m^2)

    R need not be positive definite for the quadratic form to make sense.
    """
    alpha = np.asarray(alpha, dtype=float)
    r = _values(R)
    m = alpha.shape[0]
    if alpha.shape != (m, m) or r.shape != (m, m):
        raise ModelError(f"alpha {alpha.shape} and R {r.shape} must both be m x m")
    diff = alpha[:, None, :] - alpha[None, :, :]
    quad = np.einsum("ijq,ql,ijl->ij", diff, r, diff)
    values = 1.0 - quad / (2.0 * m * m)
    np.fill_diagonal(values, 1.0)
    return CorrelationMatrix((values + values.T) / 2, CorrelationRole.INDUCED)


def flat_check(R_induced, tol=1e-9):
    v = _values(R_induced)
    m = v.shape[0]
    if m < 2:
        raise ModelError("flatness needs at least two graphs")
    off = v[np.triu_indices(m, 1)]
    value = float(off.mean())
    max_dev = float(np.max(np.abs(off - value)))
    return FlatCheck(is_flat=max_dev <= tol, value=value, max_dev=max_dev)


def diag_sum_check(alpha):
    """Every WOMNI row-sum matrix has trace m(m+1)/2."""
    alpha = np.asarray(alpha, dtype=float)
    m = alpha.shape[0]
    return bool(abs(np.trace(alpha) - m * (m + 1) / 2) <= DIAG_SUM_TOL)


def correlation_gap(R_hat, R):
    """Frobenius distance between two correlation matrices."""
    return float(np.linalg.norm(_values(R_hat) - _values(R)))
