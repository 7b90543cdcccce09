# bernreach/workers.py
"""Chunked data-parallel helpers backed by a thread pool."""
from __future__ import annotations

import concurrent.futures
from typing import Callable, TypeVar

T = TypeVar("T")


def chunk_ranges(total: int, chunk_size: int) -> list[tuple[int, int]]:
    chunk_size = max(1, int(chunk_size))
    return [(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]


def map_chunks(fn: Callable[[int, int], T], total: int, chunk_size: int, workers: int = 1) -> list[T]:
    """Apply fn(start, stop) over [0, total) in chunks; results keep chunk order."""
    ranges = chunk_ranges(total, chunk_size)
    if workers <= 1 or len(ranges) <= 1:
        return [fn(start, stop) for start, stop in ranges]
    with concurrent.futures.ThreadPoolExecutor(max_workers=min(workers, len(ranges))) as executor:
        return list(executor.map(lambda r: fn(*r), ranges))
