"""Seed derivation. Every stochastic stage draws from numpy's PCG64 seeded through SeedSequence."""
import zlib
from typing import Union

import numpy as np

Key = Union[int, str]


def _key_to_int(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"stream keys must be non-negative (got {key})")
    return int(key)


def seed_sequence(seed: int, *keys: Key) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), *(_key_to_int(k) for k in keys)])


def substream(seed: int, *keys: Key) -> np.random.Generator:
    """Independent generator for (seed, keys...), stable across platforms and scheduling."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *keys)))


def derive_seed(seed: int, *keys: Key) -> int:
    """A 63-bit integer seed for a child stage."""
    words = seed_sequence(seed, *keys).generate_state(2, dtype=np.uint32)
    return int((int(words[0]) << 31) ^ int(words[1]))
