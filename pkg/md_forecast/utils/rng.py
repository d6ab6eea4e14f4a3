"""Seed splitting.

Every consumer of randomness gets its own stream derived from the global
seed and a label, so grid cells reproduce independently of execution
order:

    SeedSequence(global_seed, spawn_key=(crc32(label), *extra))
"""

import zlib

import numpy as np


def label_key(label: str) -> int:
    """Stable 32-bit key for a stream label."""
    return zlib.crc32(label.encode("utf-8"))


def seed_sequence(global_seed: int, label: str, *extra: int) -> np.random.SeedSequence:
    """SeedSequence for the labelled stream."""
    return np.random.SeedSequence(global_seed, spawn_key=(label_key(label), *extra))


def derive_rng(global_seed: int, label: str, *extra: int) -> np.random.Generator:
    """Generator for the labelled stream."""
    return np.random.default_rng(seed_sequence(global_seed, label, *extra))


def derive_seed(global_seed: int, label: str, *extra: int) -> int:
    """Plain integer seed for the labelled stream (for configs that store ints)."""
    return int(seed_sequence(global_seed, label, *extra).generate_state(1, dtype=np.uint32)[0])
