import numpy as np
import pytest

from src.exceptions import ModelError, QPError, QPInfeasibleError
from src.theory.kkt import (
    kkt_stage1_closed_form, kkt_stage2_closed_form, stage1_kkt_system, stage2_kkt_system,
)
from src.theory.qp import QPInstance, phase_one, solve, solve_equality_kkt


def test_box_constrained_qp():
    inst = QPInstance(P=np.eye(2), q=[-1.0, -1.0], G=np.eye(2), h=[0.5, 0.5])

    result = solve(inst)

    assert result.status == "optimal"
    np.testing.assert_allclose(result.x, [0.5, 0.5], atol=1e-6)
    np.testing.assert_allclose(result.z, [0.5, 0.5], atol=1e-5)
    assert result.residuals["complementarity"] < 1e-6


def test_inactive_constraints_give_unconstrained_minimum():
    inst = QPInstance(P=2 * np.eye(3), q=[-2.0, 0.0, 2.0], G=np.eye(3), h=[5.0, 5.0, 5.0])
    np.testing.assert_allclose(solve(inst).x, [1.0, 0.0, -1.0], atol=1e-6)


def test_mixed_constraints():
    # min (x-2)^2 + (y-2)^2 with x + y = 2 and x <= 0.5
    inst = QPInstance(P=2 * np.eye(2), q=[-4.0, -4.0], A_eq=[[1.0, 1.0]], b_eq=[2.0], G=[[1.0, 0.0]], h=[0.5])

    result = solve(inst)

    np.testing.assert_allclose(result.x, [0.5, 1.5], atol=1e-6)
    assert result.residuals["primal_eq"] < 1e-8


def test_equality_only_direct_solve():
    x, lam = solve_equality_kkt(np.eye(2), np.zeros(2), np.array([[1.0, 1.0]]), np.array([1.0]))
    np.testing.assert_allclose(x, [0.5, 0.5])
    np.testing.assert_allclose(lam, [-0.5])


def test_inconsistent_equalities():
    inst = QPInstance(P=np.eye(2), q=np.zeros(2), A_eq=[[1.0, 1.0], [1.0, 1.0]], b_eq=[1.0, 2.0])
    assert phase_one(inst) is None
    with pytest.raises(QPInfeasibleError, match="inconsistent"):
        solve(inst)


def test_infeasible_inequalities():
    inst = QPInstance(P=[[1.0]], q=[0.0], G=[[1.0], [-1.0]], h=[-1.0, -1.0])
    assert phase_one(inst) == pytest.approx(1.0)
    with pytest.raises(QPInfeasibleError) as err:
        solve(inst, max_iter=50)
    assert err.value.residual == pytest.approx(1.0)


def test_infeasible_inequalities_default_budget():
    inst = QPInstance(P=[[1.0]], q=[0.0], G=[[1.0], [-1.0]], h=[-1.0, -1.0])
    with pytest.raises(QPInfeasibleError):
        solve(inst)


def test_infeasible_with_equalities():
    inst = QPInstance(P=np.eye(2), q=np.zeros(2), A_eq=[[1.0, 1.0]], b_eq=[4.0], G=np.eye(2), h=[1.0, 1.0])
    with pytest.raises(QPInfeasibleError) as err:
        solve(inst)
    assert err.value.residual == pytest.approx(1.0)


def test_indefinite_p_rejected():
    inst = QPInstance(P=np.diag([1.0, -1.0]), q=np.zeros(2), G=np.eye(2), h=np.ones(2))
    with pytest.raises(QPError, match="positive semidefinite"):
        solve(inst)


def test_asymmetric_p_rejected():
    with pytest.raises(QPError, match="not symmetric"):
        QPInstance(P=[[1.0, 1.0], [0.0, 1.0]], q=[0.0, 0.0])


def test_scaling_does_not_change_solution():
    base = QPInstance(P=np.eye(2), q=[-1.0, -3.0], G=np.eye(2), h=[0.5, 0.5])
    big = QPInstance(P=1e6 * np.eye(2), q=[-1e6, -3e6], G=np.eye(2), h=[0.5, 0.5])
    np.testing.assert_allclose(solve(base).x, solve(big).x, atol=1e-6)


@pytest.mark.parametrize("m", [3, 4, 5, 8])
def test_stage1_matches_closed_form(m):
    a = np.linspace(1.0, m - 0.5, m)
    system = stage1_kkt_system(m, a)

    result = solve(system.instance())

    np.testing.assert_allclose(result.x, kkt_stage1_closed_form(m, a), atol=1e-8)


@pytest.mark.parametrize("m", [3, 4, 5, 8])
def test_stage2_matches_closed_form(m):
    system = stage2_kkt_system(m)

    result = solve(system.instance())

    np.testing.assert_allclose(result.x, kkt_stage2_closed_form(m), atol=1e-8)
    assert kkt_stage2_closed_form(m).sum() == pytest.approx(m * (m + 1) / 2)


def test_closed_form_guards():
    with pytest.raises(ModelError):
        kkt_stage1_closed_form(3, [0.5, 2.0, 3.5])
    with pytest.raises(ModelError):
        stage1_kkt_system(2, [1.0, 2.0])
