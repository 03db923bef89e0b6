"""Seedable counter-based random streams.

Every stochastic stage of the pipeline pulls from its own named substream,
derived from (seed, purpose tag). Streams are independent, so e.g. noise
draws never perturb the trajectory draws, and dropping one stage leaves the
others bit-identical. Philox is counter-based, which keeps streams cheap to
derive and reproducible across platforms.
"""

from __future__ import annotations

import zlib

import numpy as np

MAX_SEED = 2**64


def substream(seed: int, purpose: str) -> np.random.Generator:
    """Return an independent generator for (seed, purpose).

    The purpose tag is folded in via CRC-32 so the mapping is stable across
    runs and interpreters (unlike hash()).
    """
    tag = zlib.crc32(purpose.encode("utf-8"))
    ss = np.random.SeedSequence(entropy=[int(seed), tag])
    return np.random.Generator(np.random.Philox(ss))
