"""
Keyed random generators - counter-based Philox streams keyed by (global_seed, *keys)
"""

import zlib
from typing import Union

import numpy as np

Key = Union[int, str]

# Stream identifiers keep independent consumers from sharing draws
STREAM_TRAIN = 1
STREAM_DEGRADE = 2
STREAM_FORWARD = 3
STREAM_REVERSE = 4
STREAM_DATASET = 5
STREAM_INIT = 6
STREAM_ORACLE = 7
STREAM_MASK = 8


def _key_word(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"Generator keys must be non-negative, got {key}")
    return int(key)


def make_rng(seed: int, *keys: Key) -> np.random.Generator:
    """Return a generator whose stream depends only on (seed, *keys)"""
    entropy = [_key_word(seed), *(_key_word(k) for k in keys)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def chain_rng(seed: int, chain_id: int, t: int) -> np.random.Generator:
    """Generator for the noise of one chain at one timestep"""
    return make_rng(seed, STREAM_REVERSE, chain_id, t)


def chain_start_rng(seed: int, chain_id: int) -> np.random.Generator:
    """Generator for the x_T draw of one chain"""
    return make_rng(seed, STREAM_REVERSE, chain_id, "start")
