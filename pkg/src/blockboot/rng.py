"""Splittable random streams.

Every stream is a numpy ``Philox4x64`` generator (counter based) whose 128-bit
key is ``(seed, stream_id)``. ``stream_id`` is a BLAKE2b digest of the label
path, so the stream for ``("path", 3, "boot", 17)`` never depends on how many
other streams were created, in which order, or on which thread.
"""
from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def stream_id(*labels: object) -> int:
    """64-bit identifier for a label path."""
    text = "\x1f".join(repr(label) for label in labels).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


def stream(seed: int, *labels: object) -> np.random.Generator:
    """Independent generator keyed by ``(seed, labels)``."""
    key = np.array([int(seed) & MASK64, stream_id(*labels)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed: int, *labels: object) -> int:
    """Child seed for a labelled sub-task (e.g. one simulated path)."""
    return stream_id(int(seed) & MASK64, *labels)
