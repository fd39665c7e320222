import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger(__name__)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Map `fn` over `items` in worker processes; results keep input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    n_workers = min(workers, len(items))
    logger.debug("dispatching %d tasks to %d worker processes", len(items), n_workers)
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(fn, items))
