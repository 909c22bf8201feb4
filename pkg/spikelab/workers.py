"""
Workers - Ordered Thread-Pool Map and Deterministic Sub-Seeds

Independent tasks (disorder samples, AMP seeds, grid points) run on a thread
pool; results always come back in task order so that reductions and output
files do not depend on completion order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

from tqdm.auto import tqdm

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

SEED_MASK = (1 << 64) - 1


def sub_seed(seed: int, index: int) -> int:
    """Per-task seed: seed XOR task index, kept in the unsigned 64-bit range."""
    return (int(seed) ^ int(index)) & SEED_MASK


def ordered_map(
    fn: Callable[[T], R],
    tasks: Iterable[T],
    workers: int = 1,
    progress: bool = False,
    desc: str = "tasks",
) -> List[R]:
    """
    Apply fn to every task, in parallel when workers > 1.

    Args:
        fn: Task function; must only touch its own state
        tasks: Task arguments
        workers: Thread count, 1 runs inline
        progress: Show a tqdm bar (stderr)
        desc: Label of the progress bar

    Returns:
        Results in the order of tasks
    """
    tasks = list(tasks)
    workers = max(1, min(int(workers), len(tasks) or 1))
    logger.debug("dispatching %d %s on %d worker(s)", len(tasks), desc, workers)

    if workers == 1:
        iterator = tqdm(tasks, desc=desc, disable=not progress)
        return [fn(task) for task in iterator]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        # Executor.map yields in submission order
        results = pool.map(fn, tasks)
        return list(tqdm(results, total=len(tasks), desc=desc, disable=not progress))
