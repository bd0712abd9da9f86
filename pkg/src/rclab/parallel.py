"""Thread fan-out with deterministic result ordering.

Numba kernels release the GIL, so a thread pool is enough.  The worker count
is capped by the ``RC_LAB_THREADS`` environment variable.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

MIN_CHUNK = 1 << 16


def worker_count() -> int:
    cap = os.environ.get("RC_LAB_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValueError(f"RC_LAB_THREADS must be an integer, got {cap!r}") from None
    return n


def pmap(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def chunked(kernel: Callable[[int, int], R], total: int, min_chunk: int = MIN_CHUNK) -> list[R]:
    """Run ``kernel(lo, hi)`` over a partition of ``range(total)``."""
    workers = worker_count()
    if workers <= 1 or total < 2 * min_chunk:
        return [kernel(0, total)]
    nchunks = min(4 * workers, total // min_chunk)
    bounds = [total * i // nchunks for i in range(nchunks + 1)]
    return pmap(lambda i: kernel(bounds[i], bounds[i + 1]), range(nchunks))
