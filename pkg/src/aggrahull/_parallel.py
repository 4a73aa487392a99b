"""Worker pool and seed derivation shared by the randomized routines."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

ENV_THREADS = "AGGRAHULL_THREADS"


def worker_count() -> int:
    raw = os.environ.get(ENV_THREADS, "")
    try:
        k = int(raw)
    except ValueError:
        k = 0
    if k < 1:
        k = min(8, os.cpu_count() or 1)
    return k


def thread_map(fn, items) -> list:
    """``[fn(x) for x in items]`` on a bounded thread pool, preserving order."""
    items = list(items)
    k = min(worker_count(), len(items))
    if k <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, items))


def child_seeds(seed, count: int) -> list:
    """Independent integer seeds derived from ``seed`` by counter."""
    ss = np.random.SeedSequence(seed)
    return [int(c.generate_state(1)[0]) for c in ss.spawn(count)]
