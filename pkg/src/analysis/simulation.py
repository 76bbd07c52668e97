import logging
from dataclasses import dataclass

import numpy as np

from src.analysis.embedding_stats import empirical_block_correlation, scaled_difference_covariance
from src.graphs.jrdpg import GeneratorSpec, sample_dirichlet_latents, sample_jrdpg_gen
from src.omni.omnibus import build_omnibus
from src.omni.spectral import ase
from src.workers import parallel_map, substream

logger = logging.getLogger(__name__)

REPLICATE_KEY = 6


@dataclass(frozen=True)
class DifferenceCovariance:
    cov: np.ndarray
    vertex_cov: np.ndarray
    replicates: int
    n: int

    @property
    def pooled_variance(self):
        """Mean per-coordinate variance; invariant to rotations of the embedding."""
        return float(np.trace(self.cov) / self.cov.shape[0])


def replicate_seed(seed, r):
    return int(substream(seed, REPLICATE_KEY, r).integers(2**31))


def simulate_graphs(rho, n, m, seed):
    """One flat-correlation replicate: Dirichlet latents and single-generator graphs."""
    latents = sample_dirichlet_latents(n, seed)
    return sample_jrdpg_gen(latents, GeneratorSpec.flat(rho, m, seed=seed), m), latents


def simulate_blocks(weights, rho, n, m, seed, d=2):
    """One flat-correlation replicate embedded with the Omnibus ASE; returns (blocks, latents)."""
    graphs, latents = simulate_graphs(rho, n, m, seed)
    return ase(build_omnibus(graphs, weights), d, m=m).blocks(), latents


def _difference_covariance(runs, pair, n, replicates):
    cov = scaled_difference_covariance(runs, pair, n)
    # one fixed vertex followed across replicates
    vertex_cov = scaled_difference_covariance(runs, pair, n, rows=[0]) if replicates > 1 else np.full_like(cov, np.nan)
    return DifferenceCovariance(cov=cov, vertex_cov=vertex_cov, replicates=replicates, n=n)


def compare_difference_covariance(weightings, rho, n, m, replicates, seed, pair=(0, 1), d=2, n_jobs=None):
    """Difference covariance for several weightings embedded from the same sampled graphs.

    weightings maps a label to OmniWeights; returns a dict with the same labels.
    """
    labels = list(weightings)

    def one(r):
        graphs, _ = simulate_graphs(rho, n, m, replicate_seed(seed, r))
        return [ase(build_omnibus(graphs, weightings[label]), d, m=m).blocks() for label in labels]

    runs = parallel_map(one, range(replicates), n_jobs=n_jobs)
    out = {}
    for k, label in enumerate(labels):
        out[label] = _difference_covariance([run[k] for run in runs], pair, n, replicates)
        logger.info(f"{label}: difference covariance over {replicates} replicates (n={n}, m={m}, rho={rho}): "
                    f"{np.diag(out[label].cov).round(4).tolist()}")
    return out


def difference_covariance_experiment(weights, rho, n, m, replicates, seed, pair=(0, 1), d=2, n_jobs=None):
    """Pooled covariance of scaled embedding differences over Monte-Carlo replicates.

    Replicate r always uses the same graphs for a given seed, so two weightings
    run with one seed are compared on identical data.
    """
    return compare_difference_covariance({"weights": weights}, rho, n, m, replicates, seed, pair, d, n_jobs)["weights"]


def block_correlation_experiment(weights, rho, n, m, replicates, seed, d=2, n_jobs=None):
    """Average empirical correlation of embedding errors against the true latent positions."""
    def one(r):
        blocks, latents = simulate_blocks(weights, rho, n, m, replicate_seed(seed, r), d)
        return empirical_block_correlation(blocks, reference=latents.X).values

    values = np.mean(parallel_map(one, range(replicates), n_jobs=n_jobs), axis=0)
    return values
