"""Seed derivation: every random stream is a labeled child of one master seed."""

import hashlib

import numpy as np


def derive_seed(master, *labels):
    """Stable 64-bit seed from a master seed and a sequence of labels."""
    h = hashlib.sha256(str(int(master)).encode())
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label).encode())
    return int.from_bytes(h.digest()[:8], "little")


def rng(master, *labels):
    return np.random.default_rng(derive_seed(master, *labels))


def as_rng(seed):
    """Accept an int seed or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
