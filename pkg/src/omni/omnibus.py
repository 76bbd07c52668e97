import numpy as np

from src.exceptions import GraphValidationError


def build_omnibus(c, w):
    """mn x mn Omnibus matrix whose (k, l) block is sum_q C[k, l, q] A^(q)."""
    if w.m != c.m:
        raise GraphValidationError(f"weights are for m={w.m} graphs, collection has m={c.m}")
    # symmetrized weights keep the assembled matrix exactly symmetric
    cs = (w.C + w.C.transpose(1, 0, 2)) / 2
    mn = c.m * c.n
    omnibus = np.zeros((mn, mn))
    for q, a in enumerate(c.graphs):
        if np.any(cs[:, :, q]):
            omnibus += np.kron(cs[:, :, q], a)
    return omnibus
