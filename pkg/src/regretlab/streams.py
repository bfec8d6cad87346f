"""Counter-keyed random streams.

Replicates are grouped into fixed-size blocks.  Block ``k`` of a run with
master seed ``s`` always draws from ``SeedSequence(s, spawn_key=(k,))``, so a
replicate's data depends only on ``(seed, replicate index)`` and never on how
blocks are distributed over workers.
"""

from __future__ import annotations

import numpy as np

BLOCK_SIZE = 1024


def block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.PCG64(ss))


def n_blocks(reps: int) -> int:
    return -(-int(reps) // BLOCK_SIZE)


def block_bounds(reps: int, block: int) -> tuple[int, int]:
    """Replicate index range ``[start, stop)`` covered by ``block``."""
    start = block * BLOCK_SIZE
    return start, min(start + BLOCK_SIZE, int(reps))
