"""Deterministic derivation of independent random streams.

Every stochastic routine in the package derives its generators from a master
seed plus integer context keys (stream domain, item index, grid index, ...),
so results never depend on execution order or batch size.
"""

from __future__ import annotations

import numpy as np

# Stream-domain tags keep independently derived generators from colliding
# when the same (seed, index) pair occurs in different subsystems.
STREAM_SWEEP = 1
STREAM_SAMPLE = 2
STREAM_TRAIN = 3
STREAM_DATASET = 4
STREAM_EDIT = 5


def child_rng(*key: int) -> np.random.Generator:
    """Return a generator uniquely determined by the integer key tuple."""
    if not key:
        raise ValueError("seed key must not be empty")
    entropy = [int(k) & 0xFFFFFFFFFFFFFFFF for k in key]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def sample_rngs(seed: int, n: int, stream: int = STREAM_SAMPLE) -> list[np.random.Generator]:
    """Per-item generators derived from (seed, stream, item index)."""
    return [child_rng(seed, stream, i) for i in range(n)]
