"""Reproducible random streams.

Every random draw in the package comes from a generator keyed by
``(master_seed, purpose, index)``.  The key, not the call order, fixes the
stream, so replication ``i`` produces the same numbers whichever worker
runs it and however the replications are partitioned.
"""

import zlib

import numpy as np


def purpose_tag(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def stream(master_seed: int, purpose: str, index: int = 0) -> np.random.Generator:
    seq = np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=(purpose_tag(purpose), int(index))
    )
    return np.random.Generator(np.random.PCG64(seq))
