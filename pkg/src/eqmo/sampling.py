"""Reproducible normal sampling, independent of the worker count.

Randoms are generated per fixed-size block of path indices from the substream
``SeedSequence((seed, block_index))``, so the value drawn for path p depends
only on (seed, p), never on how many threads produced it. `EQMO_WORKERS`
selects the thread count; threads fill disjoint row slices of one
preallocated array, which keeps the output bit-identical for any setting.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK = 4096


def worker_count() -> int:
    """Thread count from EQMO_WORKERS (default 1); never affects results."""
    raw = os.environ.get("EQMO_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _fill_block(out: np.ndarray, seed: int, block: int, cols: int) -> None:
    lo = block * BLOCK
    hi = min(lo + BLOCK, out.shape[0])
    rng = np.random.default_rng(np.random.SeedSequence((int(seed) & (2 ** 63 - 1), block)))
    out[lo:hi] = rng.standard_normal((hi - lo, cols))


def blocked_normals(seed: int, paths: int, cols: int) -> np.ndarray:
    """(paths, cols) standard normals keyed by (seed, path block)."""
    out = np.empty((paths, cols))
    blocks = range((paths + BLOCK - 1) // BLOCK)
    workers = worker_count()
    if workers == 1:
        for b in blocks:
            _fill_block(out, seed, b, cols)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda b: _fill_block(out, seed, b, cols), blocks))
    return out
