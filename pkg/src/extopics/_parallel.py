"""Fixed-chunk work splitting with a thread-count-independent combine order.

Every parallel section in this package partitions its work into chunks of a
fixed size (never derived from the worker count) and reassembles results in
chunk order.  Outputs are therefore bit-identical for any number of threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        return os.cpu_count() or 1
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def fixed_chunks(total: int, chunk_size: int) -> list[tuple[int, int]]:
    """Split ``range(total)`` into [start, stop) chunks of ``chunk_size``."""
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    return [(lo, min(lo + chunk_size, total)) for lo in range(0, total, chunk_size)]


def map_chunks(
    fn: Callable[..., T],
    chunks: Sequence,
    threads: int | None = None,
) -> list[T]:
    """Apply ``fn`` to each chunk; results come back in chunk order."""
    threads = resolve_threads(threads)
    if threads == 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))
