"""Order-preserving parallel map capped by ``VARLP_THREADS``."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable


def max_threads() -> int:
    raw = os.environ.get("VARLP_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def pmap(func: Callable, items: Iterable, min_items: int = 16) -> list:
    """``[func(x) for x in items]``, threaded when there is enough work."""
    items = list(items)
    n = min(max_threads(), len(items))
    if n <= 1 or len(items) < min_items:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))
