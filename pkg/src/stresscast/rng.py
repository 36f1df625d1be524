"""Deterministic random streams keyed by (seed, purpose tags).

Every source of randomness in the engine derives its stream from the run
seed plus a string/integer tag path, via a counter-based Philox generator.
Streams are independent of call order and platform, which is what makes
whole reports bit-reproducible.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_key(seed: int, tags: tuple) -> int:
    """Hash (seed, *tags) into a 128-bit Philox key."""
    h = hashlib.sha256()
    h.update(str(int(seed)).encode())
    for tag in tags:
        h.update(b"\x1f")
        h.update(str(tag).encode())
    return int.from_bytes(h.digest()[:16], "little")


def rng_for(seed: int, *tags) -> np.random.Generator:
    """Return a fresh generator for the given purpose.

    Calling twice with the same (seed, tags) yields identical streams;
    any differing tag yields an unrelated stream.
    """
    return np.random.Generator(np.random.Philox(key=derive_key(seed, tags)))
