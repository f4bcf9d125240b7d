"""
Seed derivation for reproducible runs.
"""

import zlib
from typing import Union

import numpy as np


def derive_seed(base_seed: int, *keys: Union[int, str]) -> int:
    """
    Derive an independent 32-bit seed from a base seed and a key path

    Args:
        base_seed: Run-level seed
        keys: Stage names and indices (e.g. 'noise', 12, 1)

    Returns:
        Seed that depends only on the inputs, never on call order
    """
    entropy = [int(base_seed) & 0xFFFFFFFF]
    for key in keys:
        if isinstance(key, str):
            entropy.append(zlib.crc32(key.encode('utf-8')))
        else:
            entropy.append(int(key) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
