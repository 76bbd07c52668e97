import logging
from dataclasses import dataclass

import numpy as np

from src.exceptions import ModelError
from src.graphs.store import GraphCollection
from src.theory.correlation_matrix import CorrelationMatrix, CorrelationRole
from src.workers import parallel_map, substream

logger = logging.getLogger(__name__)

# substream keys under one experiment seed
LATENT_KEY = (0,)
GENERATOR_KEY = (1, 0)
GRAPH_KEY = 2
SUBJECT_KEY = 3

PROB_TOL = 1e-12


@dataclass(frozen=True)
class LatentPositions:
    X: np.ndarray
    distribution: str = "custom"

    def __post_init__(self):
        x = np.array(self.X, dtype=float)
        if x.ndim != 2:
            raise ModelError(f"latent positions must be n x d, got shape {x.shape}")
        x.setflags(write=False)
        object.__setattr__(self, "X", x)

    @property
    def n(self):
        return self.X.shape[0]

    def probabilities(self):
        """P = X X^T, checked to lie in [0, 1] and snapped onto it."""
        p = self.X @ self.X.T
        lo, hi = p.min(initial=0.0), p.max(initial=0.0)
        if lo < -PROB_TOL or hi > 1 + PROB_TOL:
            raise ModelError(f"edge probabilities outside [0, 1]: range [{lo:.6g}, {hi:.6g}]")
        return np.clip(p, 0.0, 1.0)


@dataclass(frozen=True)
class GeneratorSpec:
    nu: tuple
    seed: int = 0

    def __post_init__(self):
        nu = tuple(float(v) for v in np.atleast_1d(self.nu))
        for k, v in enumerate(nu, start=1):
            if not 0.0 <= v <= 1.0:
                # negative pairwise correlation has no single-generator construction
                raise ModelError(f"generator correlation for graph {k} is {v}, must lie in [0, 1]")
        object.__setattr__(self, "nu", nu)

    @classmethod
    def flat(cls, rho, m, seed=0):
        if not 0.0 <= rho <= 1.0:
            raise ModelError(f"flat correlation {rho} must lie in [0, 1]")
        return cls(nu=(float(np.sqrt(rho)),) * m, seed=seed)

    def correlation(self):
        return CorrelationMatrix.single_generator(self.nu, CorrelationRole.INHERENT)


def _upper_pairs(n):
    # column-major upper triangle: (0,1), (0,2), (1,2), (0,3), ... so draws are prefix-stable in n
    cols, rows = np.tril_indices(n, -1)
    return rows, cols


def _fill_symmetric(n, rows, cols, values):
    a = np.zeros((n, n))
    a[rows, cols] = values
    a[cols, rows] = values
    return a


def sample_dirichlet_latents(n, seed):
    if n < 1:
        raise ModelError(f"need at least one vertex, got n={n}")
    rng = substream(seed, *LATENT_KEY)
    draws = rng.dirichlet(np.ones(3), size=n)
    return LatentPositions(X=draws[:, :2], distribution="dirichlet(1,1,1)")


def sample_rdpg(latents, seed, key=GENERATOR_KEY):
    p = latents.probabilities()
    rows, cols = _upper_pairs(latents.n)
    u = substream(seed, *key).random(rows.size)
    return _fill_symmetric(latents.n, rows, cols, (u < p[rows, cols]).astype(float))


def _correlated_draw(p_edge, generator_edges, rho_k, u):
    prob = np.where(generator_edges == 1.0, p_edge + rho_k * (1.0 - p_edge), p_edge * (1.0 - rho_k))
    return (u < prob).astype(float)


def sample_jrdpg_gen(latents, spec, m):
    """Single-generator JRDPG: every graph is correlated with one hidden generator graph.

    Conditional on the generator the m graphs are independent, so graphs k1 and k2 are
    edgewise correlated at nu[k1] * nu[k2] while each keeps the RDPG marginal.
    """
    if len(spec.nu) != m:
        raise ModelError(f"generator spec has {len(spec.nu)} correlations for m={m} graphs")
    p = latents.probabilities()
    n = latents.n
    rows, cols = _upper_pairs(n)
    p_edge = p[rows, cols]
    a0 = sample_rdpg(latents, spec.seed)
    gen_edges = a0[rows, cols]

    def draw(k):
        u = substream(spec.seed, GRAPH_KEY, k).random(rows.size)
        return _fill_symmetric(n, rows, cols, _correlated_draw(p_edge, gen_edges, spec.nu[k], u))

    graphs = parallel_map(draw, range(m))
    logger.debug(f"sampled {m} single-generator graphs on {n} vertices (seed {spec.seed})")
    return GraphCollection(graphs=tuple(graphs))


def empirical_edge_correlation(c, P=None):
    """Pairwise edge correlation across graphs over the above-diagonal entries.

    With an edge-probability matrix the entries are standardized by their own
    Bernoulli mean and variance; otherwise plain Pearson correlation is used.
    """
    if c.m < 2:
        raise ModelError("edge correlation needs at least two graphs")
    iu = np.triu_indices(c.n, 1)
    entries = np.stack([a[iu] for a in c.graphs])
    spread = entries.std(axis=1)
    if np.any(spread == 0):
        bad = int(np.flatnonzero(spread == 0)[0]) + 1
        raise ModelError(f"graph {bad} has zero edge variance (empty or complete)")

    if P is None:
        values = np.corrcoef(entries)
    else:
        p = np.asarray(P, dtype=float)[iu]
        keep = (p > 0) & (p < 1)
        if not keep.any():
            raise ModelError("every edge probability is 0 or 1, nothing to standardize")
        z = (entries[:, keep] - p[keep]) / np.sqrt(p[keep] * (1 - p[keep]))
        values = np.clip(z @ z.T / keep.sum(), -1.0, 1.0)
    values = (values + values.T) / 2
    np.fill_diagonal(values, 1.0)
    return CorrelationMatrix(values, CorrelationRole.INHERENT)


def surrogate_collection(m, n, blocks, seed, within=0.5):
    """Synthetic labelled collection: `blocks` subjects, each with its own latent
    positions, and the m graphs split as evenly as possible among the subjects.

    Graphs of one subject follow the single-generator model with flat correlation
    `within`. Returns the collection and the 1-based subject label of each graph.
    """
    if not 1 <= blocks <= m:
        raise ModelError(f"need 1 <= blocks <= m, got blocks={blocks}, m={m}")
    sizes = np.full(blocks, m // blocks)
    sizes[: m % blocks] += 1
    graphs, labels = [], []
    for s, size in enumerate(sizes, start=1):
        subject_seed = int(substream(seed, SUBJECT_KEY, s).integers(2**31))
        latents = sample_dirichlet_latents(n, subject_seed)
        spec = GeneratorSpec.flat(within, int(size), seed=subject_seed)
        graphs.extend(sample_jrdpg_gen(latents, spec, int(size)).graphs)
        labels.extend([s] * int(size))
    return GraphCollection(graphs=tuple(graphs)), np.asarray(labels)
