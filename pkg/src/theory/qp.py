"""Dense convex QP solver.

    minimize    1/2 x'Px + q'x
    subject to  A x = b
                G x <= h

Inequality problems go through a primal-dual interior-point method with
Mehrotra predictor-corrector steps; equality-only problems are solved as one
KKT system.
"""
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.optimize import linprog

from src.exceptions import QPError, QPInfeasibleError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 200

PSD_FAIL = -1e-8
PSD_SHIFT = 1e-10
REGULARIZATION = 1e-12
STEP_FRACTION = 0.99


@dataclass
class QPInstance:
    P: np.ndarray
    q: np.ndarray
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    G: np.ndarray = None
    h: np.ndarray = None

    def __post_init__(self):
        self.P = np.atleast_2d(np.asarray(self.P, dtype=float))
        self.q = np.asarray(self.q, dtype=float).ravel()
        n = self.q.size
        if self.P.shape != (n, n):
            raise QPError(f"P has shape {self.P.shape}, expected ({n}, {n})")
        if np.max(np.abs(self.P - self.P.T), initial=0.0) > 1e-12 * max(1.0, np.abs(self.P).max(initial=0.0)):
            raise QPError("P is not symmetric")
        self.P = (self.P + self.P.T) / 2
        self.A_eq, self.b_eq = _constraint_block(self.A_eq, self.b_eq, n, "equality")
        self.G, self.h = _constraint_block(self.G, self.h, n, "inequality")

    @property
    def n(self):
        return self.q.size


def _constraint_block(mat, rhs, n, label):
    if mat is None or np.size(mat) == 0:
        return np.zeros((0, n)), np.zeros(0)
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    rhs = np.asarray(rhs, dtype=float).ravel()
    if mat.shape[1] != n or mat.shape[0] != rhs.size:
        raise QPError(f"{label} constraints have shape {mat.shape} with {rhs.size} right-hand sides for {n} variables")
    return mat, rhs


@dataclass
class QPResult:
    x: np.ndarray
    status: str
    iterations: int = 0
    y: np.ndarray = None
    z: np.ndarray = None
    residuals: dict = field(default_factory=dict)

    @property
    def objective(self):
        return self.residuals.get("objective")


def solve_equality_kkt(P, q, A_eq, b_eq):
    """Direct solve of [[P, A'], [A, 0]] [x; lam] = [-q; b]; returns (x, lam)."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    q = np.asarray(q, dtype=float).ravel()
    A, b = _constraint_block(A_eq, b_eq, q.size, "equality")
    n, p = q.size, A.shape[0]
    kkt = np.block([[P, A.T], [A, np.zeros((p, p))]])
    rhs = np.concatenate([-q, b])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", linalg.LinAlgWarning)
            sol = linalg.solve(kkt, rhs)
    except (linalg.LinAlgError, linalg.LinAlgWarning) as err:
        raise QPError(f"singular KKT matrix: {err}") from err
    return sol[:n], sol[n:]


def _psd_repair(P, check_psd):
    if not check_psd or P.size == 0:
        return P
    low = linalg.eigvalsh(P).min()
    if low < PSD_FAIL:
        raise QPError(f"P is not positive semidefinite, smallest eigenvalue {low:.3g}")
    if low < 0:
        logger.debug(f"P smallest eigenvalue {low:.3g}, shifting by {PSD_SHIFT}")
        return P + PSD_SHIFT * np.eye(P.shape[0])
    return P


def _residuals(inst, x, y, z):
    out = {
        "objective": float(0.5 * x @ inst.P @ x + inst.q @ x),
        "primal_eq": float(np.max(np.abs(inst.A_eq @ x - inst.b_eq), initial=0.0)),
        "primal_ineq": float(np.max(inst.G @ x - inst.h, initial=0.0)),
    }
    grad = inst.P @ x + inst.q
    if y is not None and y.size:
        grad = grad + inst.A_eq.T @ y
    if z is not None and z.size:
        grad = grad + inst.G.T @ z
        out["complementarity"] = float(np.max(np.abs(z * (inst.G @ x - inst.h)), initial=0.0))
        out["dual_sign"] = float(max(0.0, -z.min(initial=0.0)))
    out["stationarity"] = float(np.max(np.abs(grad), initial=0.0))
    return out


def phase_one(inst):
    """Smallest uniform violation t of Gx <= h subject to Ax = b; None when Ax = b itself has no solution."""
    n, r = inst.n, inst.G.shape[0]
    cost = np.zeros(n + 1)
    cost[-1] = 1.0
    res = linprog(
        cost,
        A_ub=np.hstack([inst.G, -np.ones((r, 1))]) if r else None,
        b_ub=inst.h if r else None,
        A_eq=np.hstack([inst.A_eq, np.zeros((inst.A_eq.shape[0], 1))]) if inst.A_eq.size else None,
        b_eq=inst.b_eq if inst.A_eq.size else None,
        bounds=[(None, None)] * n + [(None, None) if r else (0, 0)],
        method="highs",
    )
    if res.status == 2:
        return None
    return float(res.x[-1]) if res.status == 0 else float("inf")


def _check_feasible(inst, tol):
    t = phase_one(inst)
    if t is None:
        raise QPInfeasibleError("equality constraints are inconsistent")
    scale = 1.0 + np.max(np.abs(inst.h), initial=0.0)
    if t > tol * scale:
        raise QPInfeasibleError(f"inequality constraints cannot be met, smallest violation {t:.3g}", residual=t)


def _all_finite(*arrays):
    return all(np.isfinite(a).all() for a in arrays)


def _max_step(v, dv):
    neg = dv < 0
    if not neg.any():
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def _interior_point(P, q, A, b, G, h, tol, max_iter, x0):
    n, p, r = q.size, A.shape[0], G.shape[0]
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    y = np.zeros(p)
    s = np.maximum(h - G @ x, 1.0)
    z = np.ones(r)
    scale_d = 1.0 + np.max(np.abs(q), initial=0.0)
    scale_p = 1.0 + np.max(np.abs(b), initial=0.0)
    scale_i = 1.0 + np.max(np.abs(h), initial=0.0)

    for it in range(1, max_iter + 1):
        r_d = P @ x + q + A.T @ y + G.T @ z
        r_p = A @ x - b
        r_i = G @ x + s - h
        mu = float(s @ z) / r
        if not _all_finite(x, s, z, r_d, r_p, r_i, mu) or np.max(np.abs(x), initial=0.0) > 1e12:
            return x, y, z, "diverged", it - 1
        if (np.max(np.abs(r_d)) <= tol * scale_d
                and np.max(np.abs(r_p), initial=0.0) <= tol * scale_p
                and np.max(np.abs(r_i)) <= tol * scale_i
                and mu <= tol):
            return x, y, z, "optimal", it - 1

        w = z / s
        kkt = np.block([
            [P + G.T @ (w[:, None] * G) + REGULARIZATION * np.eye(n), A.T],
            [A, -REGULARIZATION * np.eye(p)],
        ])
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", linalg.LinAlgWarning)
                lu = linalg.lu_factor(kkt)
        except (ValueError, linalg.LinAlgError) as err:
            raise QPError(f"interior-point system could not be factored: {err}") from err

        def direction(r_c):
            rhs = np.concatenate([-r_d - G.T @ ((z * r_i - r_c) / s), -r_p])
            try:
                sol = linalg.lu_solve(lu, rhs)
            except ValueError as err:
                raise QPError(f"interior-point step is not finite: {err}") from err
            dx, dy = sol[:n], sol[n:]
            dz = w * (G @ dx) + (z * r_i - r_c) / s
            ds = -r_i - G @ dx
            return dx, dy, dz, ds

        # predictor
        dx, dy, dz, ds = direction(s * z)
        step_aff = min(_max_step(s, ds), _max_step(z, dz))
        mu_aff = float((s + step_aff * ds) @ (z + step_aff * dz)) / r
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

        # corrector
        dx, dy, dz, ds = direction(s * z + ds * dz - sigma * mu)
        step = STEP_FRACTION * min(_max_step(s, ds), _max_step(z, dz))
        step = min(step, 1.0)
        x, y, z, s = x + step * dx, y + step * dy, z + step * dz, s + step * ds
        logger.debug(f"ipm iter {it}: mu={mu:.3e} step={step:.3f}")

    return x, y, z, "max_iter", max_iter


def solve(inst, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, x0=None, check_psd=True):
    # work on a copy scaled to unit magnitude so tolerances do not depend on the units of P and q
    scale = max(np.abs(inst.P).max(initial=0.0), np.abs(inst.q).max(initial=0.0))
    scale = scale if scale > 0 else 1.0
    P = _psd_repair(inst.P / scale, check_psd)
    q = inst.q / scale
    A, b, G, h = inst.A_eq, inst.b_eq, inst.G, inst.h

    if G.shape[0] == 0:
        try:
            x, y = solve_equality_kkt(P, q, A, b)
        except QPError:
            if A.shape[0]:
                _check_feasible(inst, tol)
            raise
        y = y * scale
        return QPResult(x=x, status="optimal", y=y, z=np.zeros(0), residuals=_residuals(inst, x, y, None))

    try:
        x, y, z, status, iters = _interior_point(P, q, A, b, G, h, tol, max_iter, x0)
    except (QPError, ValueError):
        _check_feasible(inst, tol)
        raise
    if status != "optimal":
        _check_feasible(inst, tol)
        if status == "diverged":
            raise QPError("interior-point iterates diverged; objective may be unbounded below")
        logger.warning(f"QP stopped at max_iter={max_iter} without meeting tol={tol:g}")
    y, z = y * scale, z * scale
    return QPResult(x=x, status=status, iterations=iters, y=y, z=z, residuals=_residuals(inst, x, y, z))
