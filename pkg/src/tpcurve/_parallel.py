"""Thread pool for the row-blocked pair loops.

Blocks are always returned in submission order so that every reduction
happens in the same fixed order regardless of the thread count.
"""

import os
from concurrent.futures import ThreadPoolExecutor

_threads = os.cpu_count() or 1


def set_threads(n):
    global _threads
    if n is None or n <= 0:
        n = os.cpu_count() or 1
    _threads = int(n)


def get_threads():
    return _threads


def ordered_map(fn, items):
    items = list(items)
    if _threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=_threads) as pool:
        return list(pool.map(fn, items))


def row_blocks(m, ncols, budget=2_000_000):
    """Split ``range(m)`` into contiguous blocks of at most ``budget`` cells."""
    size = max(1, min(m, budget // max(ncols, 1)))
    return [range(s, min(s + size, m)) for s in range(0, m, size)]
