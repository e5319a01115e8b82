"""Utilities module."""

from __future__ import annotations

import asyncio
import logging
from concurrent.futures import Executor, ThreadPoolExecutor
from typing import Any, Callable, Coroutine, Iterable, List, Optional, Sequence, Type, TypeVar
from warnings import warn

import numpy as np

from .exceptions import SteinLossWarning

_LOGGER = logging.getLogger(__name__)

_T = TypeVar("_T")


def first_or_none(lst: Iterable[_T], predicate: Callable[[_T], Any]) -> Optional[_T]:
    """Return the first occurrence or `None` of an iterable, given a predicate."""
    filter_iter = filter(predicate, lst)
    return next(filter_iter, None)


def add_async_job(
    target: Callable | Coroutine, *args: Any, executor: Optional[Executor] = None
) -> asyncio.Task | asyncio.Future:
    """Add a callable to the event loop."""
    loop = asyncio.get_event_loop()
    task: asyncio.Future | asyncio.Task

    if asyncio.iscoroutine(target):
        task = loop.create_task(target)
    elif asyncio.iscoroutinefunction(target):
        task = loop.create_task(target(*args))
    else:
        task = loop.run_in_executor(executor, target, *args)

    return task


def send_warning(message: str, category: Type[SteinLossWarning] = SteinLossWarning) -> None:
    """Send an advisory warning."""
    warn(message, category, stacklevel=2)
    _LOGGER.warning(message)


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Return the generator of replication block ``block`` under master ``seed``.

    Replication i belongs to block i // block_size; every block owns an
    independent counter-based Philox stream keyed by (seed, block).
    """
    sequence = np.random.SeedSequence(seed, spawn_key=(block,))
    return np.random.Generator(np.random.Philox(sequence))


def block_ranges(n: int, block_size: int) -> List[tuple[int, int, int]]:
    """Split ``n`` replications into (block, start, stop) triples."""
    if n < 1:
        raise ValueError("replication count must be >= 1")
    if block_size < 1:
        raise ValueError("block size must be >= 1")
    return [
        (block, start, min(start + block_size, n))
        for block, start in enumerate(range(0, n, block_size))
    ]


async def gather_blocks(
    func: Callable[..., _T], blocks: Sequence[tuple[int, int, int]], threads: int
) -> List[_T]:
    """Run ``func(block, start, stop)`` for every block on a worker pool, in block order."""
    with ThreadPoolExecutor(max_workers=threads) as executor:
        jobs = [add_async_job(func, *block, executor=executor) for block in blocks]
        return list(await asyncio.gather(*jobs))


def run_blocks(
    func: Callable[..., _T], blocks: Sequence[tuple[int, int, int]], threads: int = 1
) -> List[_T]:
    """Run ``func(block, start, stop)`` for every block and return results in block order."""
    if threads <= 1 or len(blocks) <= 1:
        return [func(*block) for block in blocks]
    _LOGGER.debug("Running %s blocks on %s threads", len(blocks), threads)
    return asyncio.run(gather_blocks(func, blocks, threads))
