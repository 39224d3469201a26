"""On-disk memoization of sampled orbits.

Entries are ``.npz`` files named by a SHA-256 of the flow identity (which
includes ``dt_internal`` for integrated flows), the initial points, the
sampling step and any extra key material.  A file that fails to load is
recomputed and overwritten.
"""
from __future__ import annotations

import hashlib
import logging
import os
import tempfile
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


class TrajectoryCache:
    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0

    def key(self, kind: str, flow, points: np.ndarray, dt: float, extra=()) -> str:
        h = hashlib.sha256()
        h.update(kind.encode())
        h.update(flow.cache_id.encode())
        pts = np.ascontiguousarray(points, dtype=np.float64)
        h.update(repr(pts.shape).encode())
        h.update(pts.tobytes())
        h.update(repr(float(dt)).encode())
        h.update(repr(tuple(extra)).encode())
        return h.hexdigest()

    def path(self, key: str) -> Path:
        return self.directory / f"{key}.npz"

    def get_or_compute(self, kind, flow, points, dt, compute, extra=()):
        """Load the entry or call ``compute()`` and store its result.

        ``compute`` returns an array or a dict of arrays; the same type is
        returned on a hit.
        """
        path = self.path(self.key(kind, flow, points, dt, extra))
        if path.exists():
            try:
                with np.load(path, allow_pickle=False) as data:
                    arrays = {k: data[k] for k in data.files}
                self.hits += 1
                return arrays["__array__"] if "__array__" in arrays else arrays
            except Exception as exc:  # corrupt or truncated entry
                log.warning("discarding unreadable cache entry %s (%s)", path.name, exc)
        result = compute()
        self.misses += 1
        arrays = result if isinstance(result, dict) else {"__array__": result}
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        os.close(fd)
        try:
            with open(tmp, "wb") as fh:
                np.savez(fh, **arrays)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        return result
