import logging
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from src.exceptions import Corr2OmniError, QPError, WeightValidationError
from src.omni.weights import (
    alpha_from_pairs, alpha_matrix, classical_omni, dominance_margin, pairs_from_alpha, random_womni_alpha,
    womni_from_alpha,
)
from src.corr2omni.problem import (
    RIDGE_SCHEDULE, b_matrix, build_problem, max_constraint_violation, stress, stress_of_alpha, womni_constraints,
)
from src.theory.correlation import induced_correlation
from src.theory.qp import QPInstance, solve
from src.workers import parallel_map, substream

logger = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-8
# dominance may fall short of eps_dom by at most this after the QP tolerance and WOMNI snapping
OUTPUT_SLACK = 1e-8
RESTART_KEY = 5
RESTART_CONCENTRATION = 2.0


@dataclass(frozen=True)
class MajorizationState:
    A_tilde: np.ndarray
    iteration: int
    sigma: float
    B: np.ndarray = None
    accepted: bool = True
    max_violation: float = 0.0

    def alpha(self, prob):
        return self.A_tilde @ prob.L_inv


@dataclass
class Corr2OmniResult:
    alpha: np.ndarray
    weights: object
    induced: object
    stress_log: pd.DataFrame
    eps_used: float
    stress: float
    start: str
    classical_stress: float
    dominance_margin: float = None

    def report_alpha(self):
        """alpha with entries within 5e-5 of a 4-decimal value snapped, for display only."""
        rounded = np.round(self.alpha, 4)
        return np.where(np.abs(self.alpha - rounded) <= 5e-5, rounded, self.alpha)


def quadratic_term(prob):
    # sum_{i<j} w_ij d_ij^2 = tr(A~' V A~) = vec(A~)' (V kron I) vec(A~) in row-major order
    return 2.0 * np.kron(prob.V, np.eye(prob.m))


def snap_to_womni(A_tilde, prob):
    """Project A~ onto exact WOMNI pair and row sums; returns (A~, alpha)."""
    alpha = alpha_from_pairs(pairs_from_alpha(A_tilde @ prob.L_inv), prob.m)
    return alpha @ prob.L, alpha


def initial_state(alpha, prob, eps_dom):
    A_tilde = np.asarray(alpha, dtype=float) @ prob.L
    return MajorizationState(
        A_tilde=A_tilde,
        iteration=0,
        sigma=stress(A_tilde, prob),
        max_violation=max_constraint_violation(alpha, eps_dom),
    )


def majorize_step(state, prob, constraints, P=None, qp_tol=1e-9):
    """One Guttman-style update: minimize the quadratic majorizer of stress at the current
    configuration over the affine WOMNI feasible set."""
    m = prob.m
    B = b_matrix(state.A_tilde, prob)
    P = quadratic_term(prob) if P is None else P
    q = -2.0 * (B @ state.A_tilde).ravel()
    inst = QPInstance(P=P, q=q, A_eq=constraints.A_eq, b_eq=constraints.b_eq, G=constraints.G, h=constraints.h)
    result = solve(inst, tol=qp_tol, x0=state.A_tilde.ravel(), check_psd=False)

    A_new, alpha = snap_to_womni(result.x.reshape(m, m), prob)
    sigma = stress(A_new, prob)
    if sigma > state.sigma + MONOTONE_SLACK:
        logger.debug(f"step {state.iteration + 1} rejected: stress {sigma:.10g} > {state.sigma:.10g}")
        return replace(state, B=B, accepted=False)
    return MajorizationState(
        A_tilde=A_new,
        iteration=state.iteration + 1,
        sigma=sigma,
        B=B,
        accepted=True,
        max_violation=max_constraint_violation(alpha, constraints.eps_dom),
    )


def _run(start_alpha, prob, constraints, max_iter, eps_stress, qp_tol):
    P = quadratic_term(prob)
    state = initial_state(start_alpha, prob, constraints.eps_dom)
    log = [(0, state.sigma, state.max_violation)]
    for _ in range(max_iter):
        prev = state.sigma
        state = majorize_step(state, prob, constraints, P=P, qp_tol=qp_tol)
        if not state.accepted:
            break
        log.append((state.iteration, state.sigma, state.max_violation))
        change = abs(prev - state.sigma)
        if change < eps_stress or change == 0.0:
            break
        if state.iteration % 100 == 0:
            logger.debug(f"iter {state.iteration}: stress {state.sigma:.10g}")
    return state, pd.DataFrame(log, columns=["iter", "sigma", "max_constraint_violation"])


def corr2omni(
    R_inherent,
    R_target,
    W=None,
    max_iter=5000,
    eps_stress=0.0,
    eps_dom=None,
    ridge_schedule=RIDGE_SCHEDULE,
    init=None,
    restarts=4,
    seed=0,
    qp_tol=1e-9,
    n_jobs=None,
):
    """Find WOMNI weights whose induced correlation is closest, in stress, to the target.

    Starts from classical OMNI (or `init`) plus `restarts` random feasible weightings;
    classical OMNI is a fixed point whenever the target is symmetric under relabeling.
    The lowest final stress wins.
    """
    prob = build_problem(R_inherent, R_target, W, ridge_schedule)
    m = prob.m
    eps_dom = 1e-3 * m if eps_dom is None else float(eps_dom)
    constraints = womni_constraints(prob, eps_dom)
    classical = alpha_matrix(classical_omni(m))
    classical_stress = stress_of_alpha(classical, prob)
    logger.info(f"corr2omni m={m}: classical OMNI stress {classical_stress:.10g}, ridge {prob.eps_used:g}")

    starts = [("init" if init is not None else "classical", classical if init is None else np.asarray(init, dtype=float))]
    for k in range(restarts):
        rng = substream(seed, RESTART_KEY, k)
        starts.append((f"restart-{k + 1}", random_womni_alpha(m, rng, eps_dom, concentration=RESTART_CONCENTRATION)))

    def attempt(start):
        label, alpha0 = start
        try:
            state, log = _run(alpha0, prob, constraints, max_iter, eps_stress, qp_tol)
        except QPError as err:
            logger.warning(f"corr2omni start {label} failed: {err}")
            return None
        logger.debug(f"start {label}: stress {state.sigma:.10g} after {state.iteration} iterations")
        return label, state, log

    runs = [run for run in parallel_map(attempt, starts, n_jobs=n_jobs) if run is not None]
    if not runs:
        raise Corr2OmniError(f"QP infeasible from every one of {len(starts)} starts")
    label, state, log = min(runs, key=lambda run: run[1].sigma)

    alpha = state.alpha(prob)
    alpha = alpha_from_pairs(pairs_from_alpha(alpha), m)
    margin = dominance_margin(alpha)
    if margin < eps_dom - OUTPUT_SLACK:
        raise Corr2OmniError(f"recovered weights have dominance margin {margin:.3g}, below eps_dom={eps_dom:g}")
    try:
        weights = womni_from_alpha(alpha, dominance_slack=OUTPUT_SLACK)
    except WeightValidationError as err:
        raise Corr2OmniError(f"recovered weights are not a valid WOMNI: {err}") from err
    induced = induced_correlation(alpha, R_inherent)
    logger.info(
        f"corr2omni m={m}: best start {label}, stress {state.sigma:.10g} after {state.iteration} iterations,"
        f" dominance margin {margin:.4g}"
    )
    return Corr2OmniResult(
        alpha=alpha,
        weights=weights,
        induced=induced,
        stress_log=log,
        eps_used=prob.eps_used,
        stress=state.sigma,
        start=label,
        classical_stress=classical_stress,
        dominance_margin=margin,
    )
