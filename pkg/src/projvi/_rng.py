"""Counter-based random streams.

Every random draw in the package comes from a stream keyed by the master
seed plus a tuple of labels and counters, so results do not depend on the
order in which independent tasks run.
"""

import zlib

import numpy as np


def _label(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part)


def stream(seed: int, *key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(_label(k) for k in key)))
