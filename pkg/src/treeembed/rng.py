"""Named, reproducible random substreams."""

from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    return zlib.crc32(str(part).encode())


def substream(seed, *names) -> np.random.Generator:
    """Generator determined by ``seed`` and the sequence of ``names``."""
    return np.random.default_rng(np.random.SeedSequence([_key(seed), *(_key(n) for n in names)]))


def derive_seed(seed, *names) -> int:
    return int(np.random.SeedSequence([_key(seed), *(_key(n) for n in names)]).generate_state(1)[0])
