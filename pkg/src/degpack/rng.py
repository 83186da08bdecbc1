"""Seed derivation and stream splitting.

All randomness flows through numpy's PCG64. Derived seeds are stable
64-bit SHA-256 digests of their parts, so results are portable across
machines and processes:

  - trial i of an experiment with master seed M uses derive64(M, "trial", i)
  - a packing run with seed S uses stream(S, 0) for the bulk/reservoir
    split and stream(S, s) for embedding stage s >= 1

Ports using a different generator reproduce statistics, not traces.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive64(*parts: int | str) -> int:
    """Stable 64-bit hash of the given parts."""
    text = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def stream(*parts: int | str) -> np.random.Generator:
    """PCG64 generator seeded from derive64(*parts)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(derive64(*parts))))
