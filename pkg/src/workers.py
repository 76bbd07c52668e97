import os
import logging

import numpy as np
from joblib import Parallel, delayed

logger = logging.getLogger(__name__)

# worker cap for replicate loops, restarts and search chunks
_threads_raw = os.getenv("OMNIKIT_THREADS")
try:
    OMNIKIT_THREADS = int(_threads_raw) if _threads_raw else -1
except ValueError:
    logger.warning(f"OMNIKIT_THREADS={_threads_raw!r} is not an integer, using all cores")
    OMNIKIT_THREADS = -1


def substream(seed, *key):
    """Counter-based generator for one named substream of a seeded experiment.

    Every (seed, key) pair maps to its own Philox stream, so adding graphs or
    replicates never shifts the draws of the ones that already existed.
    """
    seq = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def parallel_map(func, items, n_jobs=None):
    # threads, not processes: LAPACK releases the GIL
    items = list(items)
    jobs = OMNIKIT_THREADS if n_jobs is None else n_jobs
    if jobs == 1 or len(items) <= 1:
        return [func(item) for item in items]
    return Parallel(n_jobs=jobs, prefer="threads")(delayed(func)(item) for item in items)
