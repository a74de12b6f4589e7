"""Deterministic random streams.

All randomness in the package flows from a single 64-bit seed through
counter-based Philox generators, so any experiment is replayable
bit-exactly.  Independent substreams are derived from the seed plus a
tuple of small integers naming the consumer (e.g. subsample index).
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *ids: int) -> np.random.Generator:
    """Return an independent Philox generator for (seed, *ids).

    The same arguments always yield a generator producing the same
    sequence; distinct id tuples yield statistically independent streams.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(i) for i in ids))
    return np.random.Generator(np.random.Philox(ss))
