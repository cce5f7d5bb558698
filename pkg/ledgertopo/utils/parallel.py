"""Worker pool for independent per-week and per-seed jobs."""

from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, TypeVar

from ledgertopo.utils.logging import get_logger

logger = get_logger(__name__)

J = TypeVar("J")
R = TypeVar("R")


def run_jobs(fn: Callable[[J], R], jobs: Iterable[J], max_workers: int = 1) -> list[R]:
    """Apply ``fn`` to every job and return the results in job order.

    With ``max_workers == 1`` the jobs run in-process; otherwise they are
    spread over a process pool, so ``fn`` and the jobs must be picklable.
    The result list never depends on the worker count.

    Args:
        fn: Module-level function applied to each job
        jobs: Job arguments
        max_workers: Process count

    Returns:
        One result per job, in the order the jobs were given
    """
    job_list: Sequence[J] = list(jobs)
    if max_workers <= 1 or len(job_list) <= 1:
        return [fn(job) for job in job_list]

    workers = min(max_workers, len(job_list))
    logger.debug(f"Dispatching {len(job_list)} jobs to {workers} workers")
    chunksize = max(1, len(job_list) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, job_list, chunksize=chunksize))
