from __future__ import annotations

import os
from typing import Callable, Sequence, Union

import numpy as np
from joblib import Parallel, delayed

from ..rng import RngSeed

SeedLike = Union[int, RngSeed]


def master_seed(seed: SeedLike) -> int:
    return seed.seed if isinstance(seed, RngSeed) else int(seed)


def stream(seed: SeedLike, label: str) -> RngSeed:
    """Family of replica seeds for one task label."""
    base = master_seed(seed)
    prefix = seed.label if isinstance(seed, RngSeed) and seed.label else ""
    full = f"{prefix}/{label}" if prefix else label
    return RngSeed(base, 0, full)


def replicate(fn: Callable, args: tuple, family: RngSeed, replicas: int, threads: int = 1) -> list:
    """fn(*args, seed) for each replica seed; results in replica order."""
    seeds = [family.with_replica(r) for r in range(replicas)]
    n_jobs = threads if threads and threads > 0 else (os.cpu_count() or 1)
    if n_jobs == 1 or replicas < 2:
        return [fn(*args, s) for s in seeds]
    chunk = max(1, replicas // (4 * n_jobs))
    return Parallel(n_jobs=n_jobs, batch_size=chunk)(delayed(fn)(*args, s) for s in seeds)


def provenance(family: RngSeed, replicas: int) -> str:
    return f"seed={family.seed};stream={family.label};replicas=0..{replicas - 1}"


def check_replicas(replicas: int, minimum: int = 2) -> None:
    if replicas < minimum:
        raise ValueError(f"need at least {minimum} replicas, got {replicas}")
