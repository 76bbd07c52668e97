import pytest

from src.exceptions import ModelError
from src.omni.weights import alpha_matrix, special
from src.theory.bounds import (
    all_bounds, flat_ceiling, flat_lower_bound, flat_upper_bound, naive_lower_bound, theta_gap_check,
)
from src.theory.correlation import induced_correlation
from src.theory.correlation_matrix import CorrelationMatrix


def test_lower_bound_values():
    assert round(flat_lower_bound(30, 0.0), 2) == 0.54
    assert flat_lower_bound(100, 0.0) == pytest.approx(0.6926)


def test_ceiling():
    assert flat_ceiling(0.0) == 0.75
    assert flat_ceiling(1.0) == 1.0


def test_upper_bound_invalid_below_ten():
    small = flat_upper_bound(3, 0.0)
    assert not small.valid
    assert small.value == pytest.approx(0.6389, abs=1e-4)
    assert flat_upper_bound(10, 0.0).valid


def test_upper_bound_fails_for_m3minus():
    # the small-m upper bound sits below a flat value that is actually attained
    m3minus = induced_correlation(alpha_matrix(special("M3minus", 3)), CorrelationMatrix.identity(3))
    assert flat_upper_bound(3, 0.0).value < m3minus.off_diagonal().min()


def test_bounds_collapse_at_rho_one():
    assert flat_lower_bound(12, 1.0) == pytest.approx(1.0)
    assert flat_upper_bound(12, 1.0).value == pytest.approx(1.0)


def test_naive_bound_at_classical_alpha():
    assert naive_lower_bound(5, 0.0, 3.0) == pytest.approx(1 - 21 / 50)
    assert naive_lower_bound(5, 0.0, 3.0) <= flat_ceiling(0.0)
    with pytest.raises(ModelError):
        naive_lower_bound(5, 0.0, 2.0)


def test_bounds_need_m_three():
    with pytest.raises(ModelError):
        flat_lower_bound(2, 0.0)


@pytest.mark.parametrize("rho", [0.0, 0.3, 0.9])
def test_theta_gap_table(rho):
    table = theta_gap_check([10, 20, 40, 80, 160], rho)

    assert list(table.columns) == ["m", "lower", "upper", "gap", "m_gap", "certified"]
    assert table["certified"].all()
    assert table["m_gap"].is_monotonic_decreasing


def test_all_bounds_keys():
    b = all_bounds(30, 0.25)
    assert b["upper_valid"]
    assert b["lower"] <= b["ceiling"] <= b["upper"]
    assert b["alpha_max"] == 15.5
