"""
Deterministic parallel execution helpers.

Random streams are keyed by (seed, unit index) through numpy's counter-based
Philox generator, so results never depend on scheduling or worker count.
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor

import numpy as np

logger = logging.getLogger(__name__)


def unit_rng(seed, index):
    """Independent generator for unit ``index`` under the run seed."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(sequence))


def resolve_workers(workers=None):
    if workers is None:
        return os.cpu_count() or 1
    workers = int(workers)
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    return workers


def ordered_map(func, items, workers=1, processes=False, progress=None):
    """
    Apply ``func`` to every item and return results in input order.

    Args:
        func: Callable (module level when processes=True)
        items: Sequence of arguments
        workers: Pool size; 1 runs in-process
        processes: Use a process pool instead of threads
        progress: Optional callback(done, total)
    """
    items = list(items)
    total = len(items)
    workers = min(resolve_workers(workers), max(total, 1))

    if workers == 1:
        results = []
        for done, item in enumerate(items, start=1):
            results.append(func(item))
            if progress:
                progress(done, total)
        return results

    executor_class = ProcessPoolExecutor if processes else ThreadPoolExecutor
    logger.debug("Running %d tasks on %d %s", total, workers, 'processes' if processes else 'threads')
    chunksize = max(1, total // (workers * 4)) if processes else 1
    with executor_class(max_workers=workers) as executor:
        results = []
        for done, result in enumerate(executor.map(func, items, chunksize=chunksize), start=1):
            results.append(result)
            if progress:
                progress(done, total)
    return results


def chunk_bounds(length, chunks):
    """Split range(length) into at most ``chunks`` contiguous (start, stop) pairs."""
    chunks = max(1, min(int(chunks), length))
    edges = np.linspace(0, length, chunks + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
