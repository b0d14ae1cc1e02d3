import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    """Worker cap from ``AXISFDR_THREADS`` (default: CPU count, at least 1)."""
    env = os.environ.get("AXISFDR_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def ordered_map(func, items):
    """``list(map(func, items))`` on a thread pool; output order follows input."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
