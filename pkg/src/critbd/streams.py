"""Deterministic per-replicate random streams.

Every Monte Carlo replicate owns an independent counter-based stream keyed
by (master_seed, replicate_index).  Results therefore depend only on the
seed and the replicate index, never on scheduling or the number of worker
processes.
"""

import numpy as np

__all__ = ["replicate_rng"]


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Independent Philox stream for replicate `index` under `seed`."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, index))))
