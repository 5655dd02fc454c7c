"""Named random sub-streams derived from a single user seed."""

import numpy as np

STREAMS = {"split": 1, "init": 2, "augment": 3, "sampling": 4, "profile": 5, "synthetic": 6}


def substream(seed, name, *extra):
    """Independent generator for stream ``name``; ``extra`` ints (e.g. epoch) refine it."""
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.default_rng([seed, STREAMS[name], *(int(x) for x in extra)])
