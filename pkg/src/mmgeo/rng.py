"""Counter-based random streams.

Every random draw in the package comes from Philox keyed by a
``SeedSequence`` built from the user seed plus a tuple of stream ids, so
results do not depend on how work is scheduled.
"""
import numpy as np


def stream(seed, *keys) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *[int(k) for k in keys]])
    return np.random.Generator(np.random.Philox(ss))
