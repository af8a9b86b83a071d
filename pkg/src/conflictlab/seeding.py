"""Deterministic named substreams off a single master seed.

Every random decision in the harness draws from a generator obtained here,
so components stay independently reproducible: reseeding the sampler never
shifts the splitter, and vice versa.
"""

from __future__ import annotations

import hashlib

import numpy as np


def substream_seed(master_seed: int, name: str, index: int = 0) -> int:
    digest = hashlib.sha256(f"{master_seed}:{name}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(master_seed: int, name: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(substream_seed(master_seed, name, index))
