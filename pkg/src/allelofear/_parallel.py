"""Order-preserving parallel map used for embarrassingly parallel sweeps."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "ALLELOFEAR_THREADS"


def worker_count(default: int | None = None) -> int:
    """Thread cap from ``ALLELOFEAR_THREADS`` (0 or unset means automatic)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw:
        try:
            val = int(raw)
        except ValueError:
            val = 0
        if val > 0:
            return val
    return default or os.cpu_count() or 1


def parallel_map(func, items, workers: int | None = None) -> list:
    """``[func(i) for i in items]``, possibly on a thread pool; output order is input order."""
    items = list(items)
    n = workers or worker_count()
    if n <= 1 or len(items) <= 1:
        return [func(i) for i in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))
