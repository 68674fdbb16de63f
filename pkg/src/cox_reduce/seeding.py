"""Counter-based seed derivation.

A child seed depends only on (root seed, counter, stage tag), so adding runs
or replicates never changes the streams of the existing ones, and results do
not depend on the order in which parallel workers run.
"""

from typing import Dict

import numpy as np

STAGE_TAGS: Dict[str, int] = {
    "split": 1,
    "round1": 2,
    "round2": 3,
    "round3": 4,
    "replicate": 5,
    "arrangement": 6,
    "noise": 7,
    "design": 8,
    "verify": 9,
    "grid": 10,
    "holdout": 11,
}

SEED_MASK = (1 << 64) - 1


def derive_seed(seed: int, counter: int, stage: str) -> int:
    """Return the 64-bit seed for ``counter`` at ``stage`` under root ``seed``."""
    if stage not in STAGE_TAGS:
        raise KeyError(f"Unknown seed stage '{stage}'")
    sequence = np.random.SeedSequence(
        int(seed) & SEED_MASK, spawn_key=(int(counter), STAGE_TAGS[stage])
    )
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def generator(seed: int) -> np.random.Generator:
    """A PCG64 generator seeded from a 64-bit integer."""
    return np.random.Generator(np.random.PCG64(int(seed) & SEED_MASK))
