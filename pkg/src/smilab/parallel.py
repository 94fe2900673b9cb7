"""Order-preserving parallel map over trial-index ranges.

Work is split into contiguous ``[start, stop)`` chunks of trial indices.
Chunk results are gathered in index order and concatenated, so the output
is identical for any worker count or chunk size as long as the chunk
function computes each trial independently.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

__all__ = ["resolve_workers", "map_trials"]

ENV_WORKERS = "SMILAB_WORKERS"


def resolve_workers(workers=0) -> int:
    """Worker count; 0 means ``$SMILAB_WORKERS`` if set, else the CPU count."""
    if workers and workers > 0:
        return int(workers)
    env = os.environ.get(ENV_WORKERS, "").strip()
    if env:
        try:
            val = int(env)
        except ValueError:
            val = 0
        if val > 0:
            return val
    return os.cpu_count() or 1


def _chunks(trials, nchunks):
    bounds = np.linspace(0, trials, nchunks + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def map_trials(fn, trials: int, workers: int = 1, chunk_size: int = 2000):
    """Run ``fn(start, stop)`` over all trials and concatenate along axis 0.

    ``fn`` must be picklable (a module-level function or a
    :func:`functools.partial` of one) and return an array or a tuple of
    arrays whose leading axis indexes trials.
    """
    workers = resolve_workers(workers)
    nchunks = max(1, -(-trials // chunk_size), workers)
    spans = _chunks(trials, min(nchunks, trials) if trials else 1)
    if workers == 1 or len(spans) == 1:
        parts = [fn(a, b) for a, b in spans]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, [a for a, _ in spans], [b for _, b in spans]))
    if not parts:
        raise ValueError("no trials to run")
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(col) for col in zip(*parts))
    return np.concatenate(parts)
