"""Seeded random streams.

Every random decision in the package (corruption, shuffling, initialisation,
dropout) draws from numpy's Philox4x64 counter-based generator so that a seed
reproduces the same stream on every platform.
"""

import numpy as np

GENERATOR_NAME = "philox4x64"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def partial_shuffle(rng: np.random.Generator, population: int, count: int) -> list[int]:
    """Draw `count` distinct indices from range(population), uniformly.

    Partial Fisher-Yates: only the first `count` slots are swapped into place.
    """
    indices = list(range(population))
    for slot in range(count):
        pick = int(rng.integers(slot, population))
        indices[slot], indices[pick] = indices[pick], indices[slot]
    return indices[:count]
