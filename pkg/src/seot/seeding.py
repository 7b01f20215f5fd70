"""Named, reproducible random substreams derived from one master seed."""

from __future__ import annotations

import zlib

import numpy as np

# Stage names used across the package; listed here so reports can echo them.
SUBSTREAMS = (
    "synth",
    "barycenter-init",
    "eigensolver-start",
    "classifier-init",
)


def substream_seed(seed: int, name: str) -> int:
    """Stable derived seed for the named stage (crc32 of the name as spawn key)."""
    key = zlib.crc32(name.encode("utf-8"))
    seq = np.random.SeedSequence(seed, spawn_key=(key,))
    return int(seq.generate_state(1, dtype=np.uint64)[0] % (2**63))


def substream(seed: int, name: str) -> np.random.Generator:
    """Generator for the named stage; independent across names, stable per seed."""
    return np.random.default_rng(substream_seed(seed, name))
