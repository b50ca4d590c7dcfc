"""Monte Carlo utilities: confidence intervals, counter-based trial seeds,
and order-preserving parallel evaluation."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

Z95 = 1.959963984540054


def wilson_halfwidth(hits: int, trials: int, z: float = Z95) -> float:
    """Half-width of the Wilson score interval for a binomial proportion."""
    if trials < 1 or not 0 <= hits <= trials:
        raise ValueError(f"need 0 <= hits <= trials, got {hits}/{trials}")
    p = hits / trials
    z2n = z * z / trials
    return (z * math.sqrt(p * (1 - p) / trials + z2n / (4 * trials))) / (1 + z2n)


def trial_seed(master_seed: int, stream: int, index: int) -> np.random.SeedSequence:
    """Splittable counter-based seed: trial ``index`` of stream ``stream``
    gets the same sequence no matter how many trials run concurrently."""
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(stream, index))


def seed_id(ss: np.random.SeedSequence) -> int:
    """Stable 64-bit identifier of a seed sequence, for record keeping."""
    return int(ss.generate_state(1, np.uint64)[0])


def resolve_threads(threads: int) -> int:
    if threads < 0:
        raise ValueError("threads must be >= 0")
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def map_parallel(fn, tasks, threads: int = 0) -> list:
    """Evaluate fn over tasks, preserving order.  Results are independent
    of the worker count because every task carries its own seed."""
    workers = resolve_threads(threads)
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks))
