from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.exceptions import ModelError


class CorrelationRole(str, Enum):
    INHERENT = "inherent"
    TARGET = "target"
    INDUCED = "induced"


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric m x m matrix with unit diagonal, tagged with what it describes."""

    values: np.ndarray
    role: CorrelationRole = CorrelationRole.INHERENT

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ModelError(f"correlation matrix must be square, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ModelError("correlation matrix has non-finite entries")
        if np.max(np.abs(v - v.T), initial=0.0) > 1e-10:
            raise ModelError("correlation matrix is not symmetric")
        if np.max(np.abs(np.diag(v) - 1.0), initial=0.0) > 1e-10:
            bad = int(np.argmax(np.abs(np.diag(v) - 1.0)))
            raise ModelError(f"correlation matrix diagonal entry {bad + 1} is {v[bad, bad]}, expected 1")
        if np.any(np.abs(v) > 1 + 1e-10):
            raise ModelError("correlation entries must lie in [-1, 1]")
        v = np.clip((v + v.T) / 2, -1.0, 1.0)
        np.fill_diagonal(v, 1.0)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "role", CorrelationRole(self.role))

    @property
    def m(self):
        return self.values.shape[0]

    def off_diagonal(self):
        iu = np.triu_indices(self.m, 1)
        return self.values[iu]

    def with_role(self, role):
        return CorrelationMatrix(self.values, role)

    @classmethod
    def identity(cls, m, role=CorrelationRole.INHERENT):
        return cls(np.eye(m), role)

    @classmethod
    def flat(cls, m, value, role=CorrelationRole.INHERENT):
        """value * J + (1 - value) * I."""
        return cls(np.full((m, m), float(value)) + (1.0 - value) * np.eye(m), role)

    @classmethod
    def single_generator(cls, nu, role=CorrelationRole.INHERENT):
        nu = np.asarray(nu, dtype=float)
        v = np.outer(nu, nu)
        np.fill_diagonal(v, 1.0)
        return cls(v, role)
