"""Deterministic parallel execution of independent tasks.

Scan points and disorder realizations always run inside a worker pool with
BLAS/LAPACK thread pools pinned to one thread, even when a single worker
is requested.  Numerical results are then bit-identical for any worker
count: every task executes in an identically configured process and the
caller reduces in task-index order.
"""
from __future__ import annotations

import multiprocessing
import os
from contextlib import contextmanager
from typing import Callable, Iterable, Iterator, Optional

WORKERS_ENV_VAR = "FACILITRANS_WORKERS"

_thread_limiter = None


def resolve_worker_count(requested: Optional[int] = None) -> int:
    """Requested count, else the environment override, else available CPUs."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _pin_worker_threads() -> None:
    global _thread_limiter
    try:
        from threadpoolctl import threadpool_limits

        _thread_limiter = threadpool_limits(limits=1)
    except Exception:  # pragma: no cover - threadpoolctl is a hard dependency
        _thread_limiter = None


@contextmanager
def task_pool(workers: int) -> Iterator[Callable[[Callable, Iterable], list]]:
    """Context manager yielding an order-preserving parallel map."""
    with multiprocessing.Pool(
        processes=max(1, workers), initializer=_pin_worker_threads
    ) as pool:

        def mapper(fn: Callable, items: Iterable) -> list:
            return pool.map(fn, list(items), chunksize=1)

        yield mapper
