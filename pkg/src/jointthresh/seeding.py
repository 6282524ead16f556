"""Stable derivation of independent integer seeds from a master seed and tags."""

import zlib

import numpy as np


def _tag_value(tag):
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFF
    return zlib.crc32(str(tag).encode("utf-8"))


def derive_seed(master, *tags):
    """Return a 32-bit seed unique to ``(master, *tags)``; independent of call order."""
    ss = np.random.SeedSequence([int(master) & 0xFFFFFFFF, *(_tag_value(t) for t in tags)])
    return int(ss.generate_state(1)[0])
