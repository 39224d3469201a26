"""Order-preserving fan-out over chunks of initial points."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_THREADS = 1


def set_threads(n: int | None):
    """Set the worker count used by :func:`map_chunks` (``None``: all cores)."""
    global _THREADS
    _THREADS = max(1, int(n if n else os.cpu_count() or 1))


def get_threads() -> int:
    return _THREADS


def split(points: np.ndarray, n_chunks: int) -> list[np.ndarray]:
    n_chunks = max(1, min(n_chunks, len(points)))
    return np.array_split(points, n_chunks)


def map_chunks(func, points: np.ndarray, min_chunk: int = 64) -> list:
    """Apply ``func`` to contiguous chunks of ``points``; results keep chunk order.

    Each chunk's result depends only on its own points, so the outcome does
    not depend on the thread count.
    """
    threads = _THREADS
    if threads == 1 or len(points) < 2 * min_chunk:
        return [func(points)]
    chunks = split(points, min(threads, len(points) // min_chunk))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, chunks))
