"""Named random streams: one master seed fans out to per-component generators."""
from __future__ import annotations

import numpy as np


def named_rng(seed: int, stream: str) -> np.random.Generator:
    """Deterministic generator for (seed, stream-name); streams are independent."""
    entropy = [seed & 0xFFFFFFFF, *stream.encode("utf-8")]
    return np.random.default_rng(entropy)
