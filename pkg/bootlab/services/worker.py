import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, TypeVar

from bootlab.core.config import settings
from bootlab.services.metrics import trials_total

logger = logging.getLogger("Bootlab.Worker")

T = TypeVar("T")


def run_trials(
    task: Callable[[int], T],
    trials: int,
    operation: str,
    workers: Optional[int] = None,
) -> List[T]:
    """
    Evaluate task(0), ..., task(trials - 1) and return results in trial order.

    task must be picklable (a module-level function or a functools.partial of
    one). Each trial draws its own stream from the trial index, so the result
    list does not depend on the number of workers.
    """
    workers = workers or settings.worker_count
    logger.info(f"[TRIALS] Starting {operation}: {trials} trials on {workers} worker(s)")
    try:
        if workers == 1 or trials <= settings.CHUNK_SIZE:
            results = [task(t) for t in range(trials)]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(task, range(trials), chunksize=settings.CHUNK_SIZE))
    except Exception as e:
        logger.error(f"[TRIALS] {operation} failed: {e}", exc_info=True)
        raise
    trials_total.inc(trials, operation=operation)
    logger.info(f"[TRIALS] Finished {operation}")
    return results
