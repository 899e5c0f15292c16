"""Order-preserving parallel map.

Work is split into contiguous chunks of an id range.  Because every task
draws from its own keyed stream, the concatenated result is identical for
any worker count; workers only change wall-clock time.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")

WORKERS_ENV = "AGGROLAB_WORKERS"


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    workers = int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def chunk_ranges(n: int, parts: int) -> list[tuple[int, int]]:
    """Split range(n) into at most `parts` contiguous (start, stop) blocks."""
    parts = max(1, min(parts, n))
    bounds = [round(i * n / parts) for i in range(parts + 1)]
    return [(bounds[i], bounds[i + 1]) for i in range(parts) if bounds[i + 1] > bounds[i]]


def pmap(fn: Callable[..., T], tasks: Sequence[tuple], workers: int | None = None) -> list[T]:
    """Apply ``fn(*task)`` to each task, returning results in task order.

    ``fn`` must be a module-level function when ``workers > 1``.
    """
    workers = resolve_workers(workers)
    if workers == 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as ex:
        futures = [ex.submit(fn, *t) for t in tasks]
        return [f.result() for f in futures]
