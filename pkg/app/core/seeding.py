"""Seed management for Monte Carlo runs.

Every random stream is derived from one master seed and a stream index:

    rng = numpy.random.default_rng(SeedSequence([master_seed, stream_index]))

SeedSequence hashes the pair, so streams for distinct indices are independent
and a run is reproducible from the master seed alone. Replication ``k`` of a
sweep uses stream index ``k``; operations that need two independent draws
(e.g. two shapes) use indices 0 and 1.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

import numpy as np

from app.core.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def derive_seed(master_seed: int, stream_index: int) -> np.random.SeedSequence:
    """Seed sequence for stream ``stream_index`` under ``master_seed``."""
    if master_seed < 0 or stream_index < 0:
        raise ValueError("seeds and stream indices must be non-negative")
    return np.random.SeedSequence([int(master_seed), int(stream_index)])


def make_rng(master_seed: int, stream_index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, stream_index))


def parallel_map(func: Callable[[T], R], items: Iterable[T], max_workers: Optional[int] = None) -> List[R]:
    """Apply ``func`` to every item, in order, on a bounded thread pool.

    Results come back in input order, so output assembly is deterministic
    whatever the scheduling. numpy releases the GIL in its kernels, which is
    where replication loops spend their time.
    """
    items = list(items)
    workers = max_workers or settings.WASSERSTAT_THREADS
    workers = max(1, min(workers, len(items) or 1))
    if workers == 1:
        return [func(item) for item in items]
    logger.debug(f"Running {len(items)} tasks on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
