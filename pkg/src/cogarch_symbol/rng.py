"""Counter-based random streams and chunked, order-stable reductions.

Every Monte-Carlo experiment is cut into fixed-size chunks of paths.  Chunk
``k`` of an experiment seeded with ``seed`` always draws from the Philox
stream keyed by ``SeedSequence(seed, spawn_key=(k,))``, so the numbers a path
sees depend only on ``(seed, chunk_size, k)`` and never on how many workers
ran the chunks.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
import os
from typing import Callable, Sequence

import numpy as np

DEFAULT_CHUNK = 4096


def chunk_generator(seed: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(chunk),))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(n_paths: int, chunk_size: int = DEFAULT_CHUNK) -> list[int]:
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    if chunk_size < 1:
        raise ValueError("chunk_size must be positive")
    full, rest = divmod(n_paths, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def default_workers() -> int:
    return os.cpu_count() or 1


def map_chunks(fn: Callable[[int, int], object], n_paths: int, chunk_size: int = DEFAULT_CHUNK,
               workers: int | None = None) -> list:
    """Run ``fn(chunk_index, n_in_chunk)`` over all chunks; results in chunk order."""
    sizes = chunk_sizes(n_paths, chunk_size)
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if workers == 1 or len(sizes) == 1:
        return [fn(k, m) for k, m in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


def fsum_arrays(parts: Sequence[np.ndarray]) -> np.ndarray:
    """Elementwise compensated sum of equally shaped arrays.

    ``math.fsum`` is exactly rounded, so the result does not depend on the
    order of ``parts``.
    """
    stacked = np.stack([np.asarray(p, dtype=float) for p in parts])
    flat = stacked.reshape(len(parts), -1)
    out = np.array([math.fsum(flat[:, j]) for j in range(flat.shape[1])])
    return out.reshape(stacked.shape[1:])
