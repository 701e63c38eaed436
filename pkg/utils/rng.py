# File: utils/rng.py

"""
Random streams for replicate-level parallelism.

Every replicate owns an independent counter-based Philox stream. The
replicate seed is derived from the master seed and the replicate index
alone, so results do not depend on how replicates are spread over workers.
"""

import logging

import numpy as np

logger = logging.getLogger(__name__)

SEED_MASK = (1 << 64) - 1


def replicate_seed(master_seed: int, replicate: int) -> int:
    """
    Derive the 64-bit seed of one replicate.

    Args:
        master_seed: Seed of the whole run.
        replicate: Zero-based replicate index.

    Returns:
        int: Unsigned 64-bit seed.
    """
    seq = np.random.SeedSequence(int(master_seed) & SEED_MASK, spawn_key=(int(replicate),))
    lo, hi = seq.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def stream_for(seed: int) -> np.random.Generator:
    """Counter-based generator for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed) & SEED_MASK)))


def replicate_stream(master_seed: int, replicate: int) -> np.random.Generator:
    return stream_for(replicate_seed(master_seed, replicate))
