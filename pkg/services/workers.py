from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

from tqdm import tqdm

from config import settings

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(
    fn: Callable[[T], R],
    items: Sequence[T],
    workers: Optional[int] = None,
    desc: str = "",
) -> List[R]:
    """
    Map ``fn`` over ``items`` and return results in input order.

    With more than one worker the map runs in a process pool, so ``fn`` and
    the items must be picklable; the result never depends on scheduling.
    """
    workers = settings.WORKERS if workers is None else workers
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in progress(items, desc)]
    chunksize = max(1, len(items) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(progress(pool.map(fn, items, chunksize=chunksize), desc, total=len(items)))


def progress(items: Iterable[T], desc: str = "", total: Optional[int] = None) -> Iterable[T]:
    return tqdm(items, desc=desc, total=total, disable=not settings.SHOW_PROGRESS, leave=False)
