# qwell/core/workers.py
"""Thread-pool fan-out for embarrassingly parallel scans (numpy releases the GIL in LAPACK calls)."""
import logging
from functools import partial
from typing import Any, Callable, List, Sequence

import anyio

logger = logging.getLogger("Qwell.Workers")


async def map_in_threads(fn: Callable[[Any], Any], items: Sequence[Any], threads: int = 1) -> List[Any]:
    """
    Apply fn to every item on worker threads, at most `threads` at a time.
    Results come back in submission order regardless of completion order.
    """
    results: List[Any] = [None] * len(items)
    limiter = anyio.CapacityLimiter(max(1, int(threads)))

    async def _one(index: int, item: Any) -> None:
        results[index] = await anyio.to_thread.run_sync(partial(fn, item), limiter=limiter)

    async with anyio.create_task_group() as tg:
        for index, item in enumerate(items):
            tg.start_soon(_one, index, item)
    logger.debug(f"Mapped {len(items)} items on {limiter.total_tokens} threads")
    return results


def map_sync(fn: Callable[[Any], Any], items: Sequence[Any], threads: int = 1) -> List[Any]:
    """Blocking wrapper for callers outside an event loop."""
    if threads <= 1:
        return [fn(item) for item in items]
    return anyio.run(map_in_threads, fn, items, threads)
