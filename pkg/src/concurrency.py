"""Bounded-concurrency batch execution of pure, blocking functions."""

import asyncio
import logging
from typing import Callable, Iterable, List, Optional, TypeVar

from src.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


async def gather_limited(
    func: Callable[[T], R],
    items: Iterable[T],
    max_concurrency: Optional[int] = None,
    return_exceptions: bool = False,
) -> List:
    """
    Run ``func`` over ``items`` in worker threads, at most ``max_concurrency`` at a time.

    Args:
        func: Blocking function of one argument
        items: Inputs
        max_concurrency: Worker limit (defaults to settings.threads)
        return_exceptions: Return raised exceptions in place instead of propagating

    Returns:
        Results in input order
    """
    if max_concurrency is None:
        max_concurrency = settings.threads
    semaphore = asyncio.Semaphore(max(1, max_concurrency))

    async def run_with_semaphore(item: T):
        async with semaphore:
            return await asyncio.to_thread(func, item)

    tasks = [run_with_semaphore(item) for item in items]
    return await asyncio.gather(*tasks, return_exceptions=return_exceptions)


def map_concurrently(
    func: Callable[[T], R],
    items: Iterable[T],
    max_concurrency: Optional[int] = None,
    return_exceptions: bool = False,
) -> List:
    """Synchronous wrapper around gather_limited; results keep input order."""
    items = list(items)
    if not items:
        return []
    if max_concurrency == 1:
        results = []
        for item in items:
            try:
                results.append(func(item))
            except Exception as e:
                if not return_exceptions:
                    raise
                results.append(e)
        return results
    return asyncio.run(gather_limited(func, items, max_concurrency, return_exceptions))
