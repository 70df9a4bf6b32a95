"""Counter-based randomness (Philox) with addressable substreams.

Edge decisions are functions of (seed, canonical pair index): pair uniforms
are drawn as one Philox stream in canonical pair order, so they are
order-independent, reproducible across runs, and reusable across lambda
values (monotone coupling).  Named substreams (e.g. per quotient edge) key a
fresh Philox generator by a mixed 64-bit hash of the name.
"""

from __future__ import annotations

import numpy as np

__all__ = ["pair_stream", "substream", "mix64", "derive_seed"]

_MASK = (1 << 64) - 1


def mix64(x: int) -> int:
    """splitmix64 finalizer; a fixed bijective mixer on 64-bit ints."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return (x ^ (x >> 31)) & _MASK


def _key(*parts: int) -> int:
    h = 0
    for p in parts:
        h = mix64(h ^ (int(p) & _MASK))
    return h


def pair_stream(seed: int) -> np.random.Generator:
    """The canonical pair-uniform stream for a sampling run."""
    return np.random.Generator(np.random.Philox(key=_key(seed, 0x70616972)))


def substream(seed: int, *name: int) -> np.random.Generator:
    """An independent substream addressed by integers (e.g. an edge id)."""
    return np.random.Generator(np.random.Philox(key=_key(seed, *name)))


def derive_seed(master_seed: int, job_index: int) -> int:
    """Per-job seed: a pure function of (master seed, job index)."""
    return _key(master_seed, 0x6A6F62, job_index)
