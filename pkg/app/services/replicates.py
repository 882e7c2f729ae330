"""
Replicate fan-out
Runs independent replicates of a task, each on its own derived stream, serially
or in a process pool. Results always come back in replicate order.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from itertools import repeat
from typing import Any, Callable, List, Optional, Sequence, TypeVar

import numpy as np

from app.core.config import settings
from app.core.exceptions import InvalidParameterError
from app.core.streams import derive_stream

logger = logging.getLogger(__name__)

T = TypeVar("T")


def _run_one(task: Callable[..., T], seed: int, index: int, args: Sequence[Any]) -> T:
    return task(derive_stream(seed, index), *args)


def map_replicates(
    task: Callable[..., T],
    seed: int,
    reps: int,
    args: Sequence[Any] = (),
    workers: Optional[int] = None,
    offset: int = 0,
) -> List[T]:
    """
    Evaluate task(rng_i, *args) for i = offset .. offset + reps - 1

    `task` must be a module-level function so it can be sent to worker processes.

    Args:
        task: Replicate body taking a numpy Generator first
        seed: Master seed
        reps: Number of replicates
        args: Extra positional arguments shared by all replicates
        workers: Process count; defaults to COALESCENT_WORKERS
        offset: First replicate index, to keep streams disjoint across batches

    Returns:
        List of task results in replicate order
    """
    if reps < 1:
        raise InvalidParameterError(f"reps must be at least 1, got {reps}")
    workers = settings.WORKERS if workers is None else workers
    indices = range(offset, offset + reps)
    if workers <= 1 or reps == 1:
        return [_run_one(task, seed, i, args) for i in indices]

    logger.debug(f"running {reps} replicates of {task.__name__} on {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, repeat(task), repeat(seed), indices, repeat(args), chunksize=1))


def summarize(values: Sequence[float]) -> dict:
    """Mean, sample standard deviation and standard error over replicate-ordered values"""
    arr = np.asarray(values, dtype=float)
    count = arr.shape[0]
    mean = float(np.mean(arr))
    std = float(np.std(arr, ddof=1)) if count > 1 else 0.0
    return {
        "mean": mean,
        "std": std,
        "stderr": std / float(np.sqrt(count)),
        "reps": count,
    }
