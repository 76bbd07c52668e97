import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.spatial.distance import pdist, squareform

from src.exceptions import FactorizationError, ModelError
from src.theory.correlation_matrix import CorrelationMatrix

logger = logging.getLogger(__name__)

RIDGE_SCHEDULE = (0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2)
FACTOR_TOL = 1e-10


@dataclass(frozen=True)
class StressProblem:
    """Target dissimilarities between rows of A~ = alpha L, with L L' the (regularized) inherent correlation."""

    delta: np.ndarray
    W: np.ndarray
    L: np.ndarray
    R_reg: np.ndarray
    eps_used: float = 0.0

    @property
    def m(self):
        return self.delta.shape[0]

    @property
    def V(self):
        """Weight Laplacian: V_ij = -w_ij, V_ii = sum_j w_ij."""
        v = -self.W.copy()
        np.fill_diagonal(v, 0.0)
        np.fill_diagonal(v, -v.sum(axis=1))
        return v

    @property
    def L_inv(self):
        return linalg.solve_triangular(self.L, np.eye(self.m), lower=True)


def _values(R):
    return R.values if isinstance(R, CorrelationMatrix) else np.asarray(R, dtype=float)


def cholesky_regularized(R, ridge_schedule=RIDGE_SCHEDULE):
    """Cholesky factor of (1 - eps) R + eps I for the first eps in the schedule that factors.

    Returns (L, eps).
    """
    r = _values(R)
    m = r.shape[0]
    for eps in ridge_schedule:
        shifted = (1.0 - eps) * r + eps * np.eye(m)
        try:
            L = linalg.cholesky(shifted, lower=True)
        except linalg.LinAlgError:
            continue
        if not np.isfinite(L).all() or np.max(np.abs(L @ L.T - shifted)) > FACTOR_TOL:
            continue
        if eps > 0:
            msg = f"inherent correlation is not positive definite, ridge {eps:g} applied"
            logger.warning(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
        return L, float(eps)
    raise FactorizationError(f"no ridge in {tuple(ridge_schedule)} makes the inherent correlation factorable")


def build_problem(R_inherent, R_target, W=None, ridge_schedule=RIDGE_SCHEDULE):
    r_in, r_tg = _values(R_inherent), _values(R_target)
    m = r_in.shape[0]
    if r_tg.shape != (m, m):
        raise ModelError(f"inherent ({m}x{m}) and target {r_tg.shape} correlations differ in size")
    L, eps = cholesky_regularized(r_in, ridge_schedule)
    delta = np.sqrt(np.maximum(0.0, 2.0 * m * m * (1.0 - r_tg)))
    np.fill_diagonal(delta, 0.0)
    if W is None:
        W = np.ones((m, m)) - np.eye(m)
    W = np.asarray(W, dtype=float)
    if W.shape != (m, m) or np.any(W < 0) or np.max(np.abs(W - W.T)) > 0:
        raise ModelError("stress weights must be a symmetric nonnegative m x m matrix")
    return StressProblem(delta=delta, W=W, L=L, R_reg=L @ L.T, eps_used=eps)


def stress(A_tilde, prob):
    """sum over i < j of w_ij (delta_ij - ||A~_i - A~_j||)^2."""
    d = pdist(np.asarray(A_tilde, dtype=float))
    iu = np.triu_indices(prob.m, 1)
    return float(np.sum(prob.W[iu] * (prob.delta[iu] - d) ** 2))


def stress_of_alpha(alpha, prob):
    return stress(np.asarray(alpha, dtype=float) @ prob.L, prob)


def b_matrix(A_prev, prob):
    d = squareform(pdist(np.asarray(A_prev, dtype=float)))
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.where(d > 0, -prob.W * prob.delta / d, 0.0)
    np.fill_diagonal(b, 0.0)
    np.fill_diagonal(b, -b.sum(axis=1))
    return b


@dataclass(frozen=True)
class WomniConstraints:
    """Affine WOMNI constraints on vec(alpha), mapped onto the row-major vec(A~) variables."""

    A_eq: np.ndarray
    b_eq: np.ndarray
    G: np.ndarray
    h: np.ndarray
    eps_dom: float


def womni_constraints(prob, eps_dom):
    m = prob.m
    # vec(alpha) = T vec(A~) since alpha = A~ L^{-1} row by row
    T = np.kron(np.eye(m), prob.L_inv.T)

    def idx(i, q):
        return i * m + q

    rows_eq, rhs_eq = [], []
    for i in range(m):
        row = np.zeros(m * m)
        row[i * m:(i + 1) * m] = 1.0
        rows_eq.append(row)
        rhs_eq.append(float(m))
    for i, k in zip(*np.triu_indices(m, 1)):
        row = np.zeros(m * m)
        row[idx(i, k)] = row[idx(k, i)] = 1.0
        rows_eq.append(row)
        rhs_eq.append(1.0)

    rows_in, rhs_in = [], []
    for i in range(m):
        for j in range(m):
            if j != i:
                row = np.zeros(m * m)
                row[idx(i, j)] = 1.0
                row[idx(i, i)] = -1.0
                rows_in.append(row)
                rhs_in.append(-eps_dom)
    rows_in.extend(-np.eye(m * m))
    rhs_in.extend([0.0] * (m * m))

    return WomniConstraints(
        A_eq=np.asarray(rows_eq) @ T,
        b_eq=np.asarray(rhs_eq),
        G=np.asarray(rows_in) @ T,
        h=np.asarray(rhs_in),
        eps_dom=float(eps_dom),
    )


def max_constraint_violation(alpha, eps_dom):
    alpha = np.asarray(alpha, dtype=float)
    m = alpha.shape[0]
    iu = np.triu_indices(m, 1)
    gaps = np.diag(alpha)[:, None] - alpha
    off = ~np.eye(m, dtype=bool)
    return float(max(
        np.max(np.abs(alpha.sum(axis=1) - m)),
        np.max(np.abs(alpha[iu] + alpha[iu[1], iu[0]] - 1.0), initial=0.0),
        max(0.0, -alpha.min()),
        max(0.0, np.max(eps_dom - gaps[off], initial=0.0)),
    ))
