"""Named, splittable random substreams derived from one integer seed."""

import os
import zlib

import numpy as np

DEFAULT_SEED = 0


def default_seed():
    return int(os.environ.get("BOOSTLAB_SEED", DEFAULT_SEED))


def substream(seed, name):
    """Generator for ``name`` under ``seed``; independent of every other name."""
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))
