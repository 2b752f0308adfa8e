"""Named, splittable random streams.

Every simulated quantity draws from its own stream derived from
``(seed, *key)``, so results do not depend on generation order or on how
work is scheduled across threads.
"""

import zlib

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("stream keys must be non-negative")
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


def stream(seed: int, *key) -> np.random.Generator:
    """Independent generator for ``key`` under the root ``seed``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1),
                                spawn_key=tuple(_key_part(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
