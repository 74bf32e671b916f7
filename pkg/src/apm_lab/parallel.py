"""Deterministic block-parallel execution.

Work is cut into fixed-size blocks whose boundaries never depend on the
thread count; results come back in block order, so any reduction done by
the caller is identical for 1 or 16 workers.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from itertools import islice
from typing import Callable, Deque, Iterable, List, Optional, TypeVar

T = TypeVar("T")

# Monte Carlo trials per child RNG stream
TRIAL_BLOCK = 4096


def resolve_threads(threads: Optional[int] = None) -> int:
    """Use the given worker count, else the configured default."""
    if threads:
        return max(1, int(threads))
    from apm_lab.config import get_default_threads

    return get_default_threads()


def block_bounds(total: int, block_size: int) -> List[range]:
    return [range(start, min(start + block_size, total)) for start in range(0, total, block_size)]


def run_blocks(
    fn: Callable[[int, range], T],
    total: int,
    block_size: int,
    threads: Optional[int] = None,
    progress_callback=None,
) -> List[T]:
    """Run fn(block_index, index_range) over all blocks.

    Args:
        fn: Worker; must only touch its own block's state
        total: Number of work items
        block_size: Items per block
        threads: Worker count (default: configured)
        progress_callback: Optional callback receiving ("block_done", {...})

    Returns:
        Per-block results in block order
    """
    blocks = block_bounds(total, block_size)
    workers = min(resolve_threads(threads), max(1, len(blocks)))

    def task(index: int) -> T:
        result = fn(index, blocks[index])
        if progress_callback:
            progress_callback("block_done", {"items": len(blocks[index]), "total": total})
        return result

    if workers == 1:
        return [task(index) for index in range(len(blocks))]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, range(len(blocks))))


def map_chunks(
    fn: Callable[[list], T],
    items: Iterable,
    chunk_size: int,
    threads: Optional[int] = None,
    progress_callback=None,
) -> List[T]:
    """Apply fn to consecutive chunks of a (possibly huge) iterator.

    At most two chunks per worker are held in memory at a time. Results are
    returned in chunk order.
    """
    workers = resolve_threads(threads)
    iterator = iter(items)
    results: List[T] = []

    def next_chunk() -> list:
        return list(islice(iterator, chunk_size))

    def report(chunk_len: int) -> None:
        if progress_callback:
            progress_callback("block_done", {"items": chunk_len})

    if workers == 1:
        chunk = next_chunk()
        while chunk:
            results.append(fn(chunk))
            report(len(chunk))
            chunk = next_chunk()
        return results

    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending: Deque = deque()
        chunk = next_chunk()
        while chunk or pending:
            while chunk and len(pending) < 2 * workers:
                pending.append((len(chunk), pool.submit(fn, chunk)))
                chunk = next_chunk()
            size, future = pending.popleft()
            results.append(future.result())
            report(size)
    return results
