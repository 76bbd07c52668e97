"""Two-stage Lagrange argument that classical OMNI maximizes total induced correlation.

Stage 1 fixes the diagonal row sums a and finds the off-diagonal WOMNI weights
minimizing the summed beta terms; stage 2 optimizes a itself.
"""
from dataclasses import dataclass
from math import comb

import numpy as np

from src.exceptions import ModelError
from src.theory.qp import QPInstance


@dataclass(frozen=True)
class KKTSystem:
    B: np.ndarray
    q: np.ndarray
    r: float
    A: np.ndarray
    b: np.ndarray

    def instance(self):
        return QPInstance(P=self.B, q=self.q, A_eq=self.A, b_eq=self.b)

    def objective(self, x):
        return float(0.5 * x @ self.B @ x + self.q @ x + self.r)


def stage1_kkt_system(m, a):
    """Variables ordered (c_12, c_13, ..., c_1m, c_21, c_23, ..., c_m(m-1)) with c_ij = C[i, j, i]."""
    a = np.asarray(a, dtype=float)
    if m < 3 or a.shape != (m,):
        raise ModelError(f"stage-1 system needs m >= 3 and m diagonal sums, got m={m}, a of shape {a.shape}")
    block = 2 * (m - 4) * np.ones((m - 1, m - 1)) + 2 * m * np.eye(m - 1)
    return KKTSystem(
        B=np.kron(np.eye(m), block),
        q=4 * (m - 2) * np.ones(m * (m - 1)),
        r=-comb(m, 2) * 2 * (m - 3),
        A=np.kron(np.eye(m), np.ones((1, m - 1))),
        b=a - 1,
    )


def stage2_kkt_system(m):
    if m < 2:
        raise ModelError(f"stage-2 system needs m >= 2, got m={m}")
    return KKTSystem(
        B=2 * ((m * m - 2 * m + 2) * np.eye(m) - np.ones((m, m))),
        q=2 * (m - 1) * np.ones(m),
        r=0.0,
        A=np.ones((1, m)),
        b=np.array([m * (m + 1) / 2]),
    )


def kkt_stage1_closed_form(m, a):
    a = np.asarray(a, dtype=float)
    if np.any(a < 1):
        raise ModelError("diagonal row sums must be at least 1")
    return np.kron(a - 1, np.ones(m - 1)) / (m - 1)


def kkt_stage2_closed_form(m):
    if m < 2:
        raise ModelError(f"need m >= 2, got m={m}")
    return np.full(m, (m + 1) / 2)
