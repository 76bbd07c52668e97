from dataclasses import dataclass

import pandas as pd

from src.exceptions import ModelError

# the upper bound's proof needs (m - 8) / 2 >= 1
UPPER_BOUND_MIN_M = 10


@dataclass(frozen=True)
class BoundValue:
    value: float
    valid: bool = True


def _require_m(m, low=3):
    if m < low:
        raise ModelError(f"bound needs m >= {low}, got m={m}")


def flat_ceiling(rho):
    """Largest attainable flat correlation, reached by classical OMNI."""
    return 0.75 + rho / 4


def flat_lower_bound(m, rho):
    _require_m(m)
    return flat_ceiling(rho) - (1 - rho) * (11 / (2 * m) + 24 / m**2)


def flat_upper_bound(m, rho):
    """Upper bound on the flat correlation; flagged invalid below m = 10."""
    _require_m(m)
    return BoundValue(flat_ceiling(rho) + (1 - rho) * (5 / m - 16 / m**2), valid=m >= UPPER_BOUND_MIN_M)


def naive_lower_bound(m, rho, alpha_max):
    """Bound from the largest diagonal row sum, which is at least (m + 1) / 2 for any WOMNI."""
    if alpha_max < (m + 1) / 2 - 1e-12:
        raise ModelError(f"alpha_max={alpha_max} is below (m+1)/2 = {(m + 1) / 2}")
    return 1 - (1 - rho) * (2 * alpha_max**2 + m - 2) / (2 * m**2)


def theta_gap_check(m_grid, rho):
    """Table of lower/upper bounds and their gap over m.

    m * gap must sit in [(1-rho) 21/2, (1-rho)(21/2 + 8/m)], i.e. the gap to
    the ceiling closes like 1/m.
    """
    rows = []
    for m in m_grid:
        m = int(m)
        _require_m(m, UPPER_BOUND_MIN_M)
        lower = flat_lower_bound(m, rho)
        upper = flat_upper_bound(m, rho).value
        gap = upper - lower
        low_env = (1 - rho) * 21 / 2
        high_env = (1 - rho) * (21 / 2 + 8 / m)
        rows.append({
            "m": m,
            "lower": lower,
            "upper": upper,
            "gap": gap,
            "m_gap": m * gap,
            "certified": bool(low_env - 1e-12 <= m * gap <= high_env + 1e-12),
        })
    return pd.DataFrame(rows, columns=["m", "lower", "upper", "gap", "m_gap", "certified"])


def all_bounds(m, rho, alpha_max=None):
    """Every bound at one (m, rho), as printed by the bounds command."""
    upper = flat_upper_bound(m, rho)
    alpha_max = (m + 1) / 2 if alpha_max is None else alpha_max
    return {
        "m": m,
        "rho": rho,
        "ceiling": flat_ceiling(rho),
        "lower": flat_lower_bound(m, rho),
        "upper": upper.value,
        "upper_valid": upper.valid,
        "naive": naive_lower_bound(m, rho, alpha_max),
        "alpha_max": alpha_max,
    }
