"""Seeded random streams.

All randomness runs through PCG64 generators seeded by numpy's
``SeedSequence``.  A substream is identified by the master seed plus a tuple
of integer keys (for example ``(rate_index, rep_index)``), used as the
sequence's ``spawn_key``.  The same (seed, keys) always yields the same
stream, on any platform, regardless of which other substreams were drawn.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))
