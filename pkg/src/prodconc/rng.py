"""Seed derivation.

Every random draw in the package flows from a single 64-bit master seed
through (seed, purpose, index) so that results never depend on call order
or scheduling.
"""

import zlib

import numpy as np


def derive_rng(seed, purpose, index=0):
    """Return a Generator keyed by (seed, purpose tag, index).

    The purpose tag is hashed with CRC-32 (stable across runs and
    platforms) and folded into the spawn key together with the index.
    """
    tag = zlib.crc32(purpose.encode("utf-8"))
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1),
                                spawn_key=(tag, int(index)))
    return np.random.default_rng(ss)
