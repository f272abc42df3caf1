"""Order-preserving parallel map capped by ``OBSGRAPH_THREADS``."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    try:
        n = int(os.environ.get("OBSGRAPH_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def pmap(fn, items) -> list:
    """``[fn(x) for x in items]``, run on up to ``OBSGRAPH_THREADS`` threads.

    Results keep input order, so any reduction over them is deterministic.
    """
    items = list(items)
    n = worker_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
