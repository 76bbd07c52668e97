import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from src.exceptions import WeightValidationError
from src.graphs.store import MatrixFormat, save_matrix

logger = logging.getLogger(__name__)

ATOL = 1e-12
ALPHA_TOL = 1e-10

M4_A = (5 - np.sqrt(17)) / 2
M4_B = (np.sqrt(17) - 3) / 2

# 0-based (k, l) -> {q: weight} for the off-diagonal blocks of the m=3 optimal layouts
_M3_MINUS = {(0, 1): {0: 1.0}, (0, 2): {2: 1.0}, (1, 2): {1: 1.0}}
_M3_PLUS = {(0, 1): {1: 1.0}, (0, 2): {0: 1.0}, (1, 2): {2: 1.0}}

SPECIAL_NAMES = ("classical", "M3minus", "M3plus", "M4plus", "M5plus")


@dataclass(frozen=True)
class OmniWeights:
    """Weight tensor C with C[k, l, q] the weight of graph q in Omnibus block (k, l)."""

    C: np.ndarray
    is_womni: bool = False

    def __post_init__(self):
        c = np.array(self.C, dtype=float)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]):
            raise WeightValidationError(f"weight tensor must be m x m x m, got shape {c.shape}")
        if not np.isfinite(c).all():
            raise WeightValidationError("weight tensor has non-finite entries")
        c.setflags(write=False)
        object.__setattr__(self, "C", c)
        object.__setattr__(self, "is_womni", bool(self.is_womni))

    @property
    def m(self):
        return self.C.shape[0]


@dataclass(frozen=True)
class Violation:
    kind: str
    indices: tuple
    detail: str

    def __str__(self):
        where = ",".join(str(i) for i in self.indices)
        return f"{self.kind} at ({where}): {self.detail}"


@dataclass
class ValidationReport:
    m: int
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def kinds(self):
        return sorted({v.kind for v in self.violations})

    def __str__(self):
        if self.ok:
            return f"valid Omnibus weights (m={self.m})"
        return "\n".join(str(v) for v in self.violations)


def validate(w, dominance_slack=0.0):
    """Report every violated weight invariant; indices in the report are 1-based.

    Dominance is strict: a row-sum gap of exactly zero is a violation unless a
    positive slack is given, in which case only gaps below -slack are reported.
    """
    c, m = w.C, w.m
    report = ValidationReport(m=m)
    add = report.violations.append

    asym = np.abs(c - c.transpose(1, 0, 2))
    for k, l, q in zip(*np.nonzero(asym > ATOL)):
        if k < l:
            add(Violation("symmetry", (k + 1, l + 1, q + 1), f"C[k,l,q]={c[k, l, q]:.6g} vs C[l,k,q]={c[l, k, q]:.6g}"))

    for k, l, q in zip(*np.nonzero((c < -ATOL) | (c > 1 + ATOL))):
        add(Violation("range", (k + 1, l + 1, q + 1), f"weight {c[k, l, q]:.6g} outside [0, 1]"))

    sums = c.sum(axis=2)
    for k, l in zip(*np.triu_indices(m)):
        if abs(sums[k, l] - 1.0) > ATOL:
            add(Violation("ccc-sum", (k + 1, l + 1), f"block weights sum to {sums[k, l]:.6g}"))

    alpha = alpha_matrix(w)
    for k in range(m):
        for q in range(m):
            if q != k and alpha[k, k] - alpha[k, q] <= -dominance_slack:
                add(Violation("dominance", (k + 1, q + 1), f"alpha(k,q)={alpha[k, q]:.6g} not below alpha(k,k)={alpha[k, k]:.6g}"))

    if w.is_womni:
        for k, l, q in zip(*np.nonzero(np.abs(c) > ATOL)):
            if q != k and q != l:
                add(Violation("womni-support", (k + 1, l + 1, q + 1), "block mixes a graph outside its own pair"))
    return report


def alpha_matrix(w):
    """Row sums alpha(k, q) = sum over l of C[k, l, q]."""
    return w.C.sum(axis=1)


def classical_omni(m):
    if m < 1:
        raise WeightValidationError(f"need m >= 1, got {m}")
    c = np.zeros((m, m, m))
    for k in range(m):
        c[k, k, k] = 1.0
        for l in range(m):
            if l != k:
                c[k, l, k] = c[k, l, l] = 0.5
    return OmniWeights(C=c, is_womni=True)


def check_womni_alpha(alpha, dominance_slack=0.0):
    """Raise WeightValidationError naming the first violated WOMNI row-sum precondition."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 2 or alpha.shape[0] != alpha.shape[1]:
        raise WeightValidationError(f"alpha must be square, got shape {alpha.shape}")
    if not np.isfinite(alpha).all():
        raise WeightValidationError("alpha has non-finite entries")
    m = alpha.shape[0]
    rows = alpha.sum(axis=1)
    for i in range(m):
        if abs(rows[i] - m) > ALPHA_TOL:
            raise WeightValidationError(f"alpha row {i + 1} sums to {rows[i]:.12g}, expected {m}")
    for i, k in zip(*np.triu_indices(m, 1)):
        if abs(alpha[i, k] + alpha[k, i] - 1.0) > ALPHA_TOL:
            raise WeightValidationError(f"alpha({i + 1},{k + 1}) + alpha({k + 1},{i + 1}) = {alpha[i, k] + alpha[k, i]:.12g}, expected 1")
    if np.any(alpha < -ATOL):
        i, k = np.unravel_index(np.argmin(alpha), alpha.shape)
        raise WeightValidationError(f"alpha({i + 1},{k + 1}) = {alpha[i, k]:.6g} is negative")
    for i in range(m):
        for k in range(m):
            if k != i and alpha[i, i] - alpha[i, k] <= -dominance_slack:
                raise WeightValidationError(f"dominance fails in row {i + 1}: alpha({i + 1},{k + 1}) >= alpha({i + 1},{i + 1})")
    return alpha


def womni_from_alpha(alpha, dominance_slack=0.0):
    """Rebuild the WOMNI tensor from its row sums.

    Block (i, k) puts weight alpha(i, k) on graph k and alpha(k, i) on graph i.
    """
    alpha = check_womni_alpha(alpha, dominance_slack)
    m = alpha.shape[0]
    c = np.zeros((m, m, m))
    for i in range(m):
        c[i, i, i] = 1.0
    for i, k in zip(*np.triu_indices(m, 1)):
        c[i, k, k] = c[k, i, k] = alpha[i, k]
        c[i, k, i] = c[k, i, i] = alpha[k, i]
    return OmniWeights(C=c, is_womni=True)


def alpha_from_pairs(u, m):
    """WOMNI row sums from the upper-triangle pair weights u[(i,k)] = alpha(i,k), i < k."""
    u = np.asarray(u, dtype=float)
    iu = np.triu_indices(m, 1)
    alpha = np.zeros((m, m))
    alpha[iu] = u
    alpha[iu[1], iu[0]] = 1.0 - u
    np.fill_diagonal(alpha, m - alpha.sum(axis=1))
    return alpha


def pairs_from_alpha(alpha):
    """Nearest pair weights for an alpha that only approximately satisfies the pair sums."""
    alpha = np.asarray(alpha, dtype=float)
    iu = np.triu_indices(alpha.shape[0], 1)
    return np.clip((alpha[iu] + 1.0 - alpha[iu[1], iu[0]]) / 2, 0.0, 1.0)


def dominance_margin(alpha):
    """Smallest off-diagonal row-sum gap alpha[k, k] - alpha[k, l]."""
    alpha = np.asarray(alpha, dtype=float)
    gaps = np.diag(alpha)[:, None] - alpha
    np.fill_diagonal(gaps, np.inf)
    return float(gaps.min())


def random_womni_alpha(m, rng, eps_dom=0.0, concentration=1.0, max_tries=1000):
    """Random feasible WOMNI row sums with Beta(concentration, concentration) pair weights.

    Large concentrations pull every pair toward 1/2, i.e. toward classical OMNI.
    """
    iu_count = m * (m - 1) // 2
    for _ in range(max_tries):
        alpha = alpha_from_pairs(rng.beta(concentration, concentration, size=iu_count), m)
        if dominance_margin(alpha) > eps_dom:
            return alpha
    raise WeightValidationError(f"no WOMNI sample with dominance margin {eps_dom} after {max_tries} draws")


def _from_blocks(m, blocks):
    c = np.zeros((m, m, m))
    for k in range(m):
        c[k, k, k] = 1.0
    for (k, l), weights in blocks.items():
        for q, value in weights.items():
            c[k, l, q] = c[l, k, q] = value
    return OmniWeights(C=c, is_womni=True)


def special(name, m, params=None):
    """The named optimal layouts: M3minus/M3plus (m=3), M4plus (m=4), M5plus (m=5, params a, b, c, d)."""
    if name == "classical":
        return classical_omni(m)
    required = {"M3minus": 3, "M3plus": 3, "M4plus": 4, "M5plus": 5}
    if name not in required:
        raise WeightValidationError(f"unknown construction {name!r}, expected one of {', '.join(SPECIAL_NAMES)}")
    if m != required[name]:
        raise WeightValidationError(f"{name} is defined for m={required[name]}, got m={m}")

    if name == "M3minus":
        return _from_blocks(3, _M3_MINUS)
    if name == "M3plus":
        return _from_blocks(3, _M3_PLUS)

    if name == "M4plus":
        a, b = (M4_A, M4_B) if params is None else tuple(params)[:2]
    else:
        if params is None or len(params) != 4:
            raise WeightValidationError("M5plus needs explicit parameters (a, b, c, d)")
        a, b, c5, d5 = params
        if abs(c5 + d5 - 1.0) > ATOL:
            raise WeightValidationError(f"M5plus needs c + d = 1, got {c5 + d5:.12g}")
    if abs(a + b - 1.0) > ATOL:
        raise WeightValidationError(f"{name} needs a + b = 1, got {a + b:.12g}")

    blocks = dict(_M3_PLUS)
    for i in range(3):
        blocks[(i, 3)] = {i: a, 3: b}
    if name == "M5plus":
        for i in range(4):
            blocks[(i, 4)] = {i: c5, 4: d5}
    return _from_blocks(m, blocks)


def save_weights(w, path):
    return save_matrix(w.C, path, MatrixFormat.JSON_TENSOR, is_womni=w.is_womni)


def load_weights(path):
    """Load a json-tensor weight file; a bare nested array is accepted and WOMNI-ness inferred."""
    with open(Path(path), encoding="utf-8") as f:
        payload = json.load(f)
    if isinstance(payload, dict):
        data, is_womni = payload["data"], payload.get("is_womni")
    else:
        data, is_womni = payload, None
    c = np.asarray(data, dtype=float)
    if is_womni is None:
        is_womni = c.ndim == 3 and all(q in (k, l) for k, l, q in zip(*np.nonzero(np.abs(c) > ATOL)))
    return OmniWeights(C=c, is_womni=is_womni)
