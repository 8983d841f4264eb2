"""Named, seeded random streams"""

import zlib
from typing import Union

import numpy as np

Key = Union[int, str]


def _word(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode('utf-8'))
    return int(key)


def substream(seed: int, name: str, *keys: Key) -> np.random.Generator:
    """
    Independent generator for one named use of a run seed.

    Two calls with the same (seed, name, keys) produce identical streams;
    changing any element gives a statistically independent stream, so adding
    a consumer never shifts the numbers another consumer sees.

    Args:
        seed: Run seed (non-negative)
        name: Stream name, e.g. "train", "eval", "rollout"
        *keys: Further integer or string keys (step, instance index, ...)

    Returns:
        numpy Generator seeded from the combined key
    """
    entropy = [int(seed), _word(name)] + [_word(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def child_seed(seed: int, name: str, *keys: Key) -> int:
    """A 63-bit integer seed drawn from a named substream"""
    return int(substream(seed, name, *keys).integers(0, 2 ** 63 - 1))
