"""Vertex-set bitmasks.

A set of vertices over [0, n) is a Python int with bit v set iff v is in
the set. Arbitrary-precision ints make AND / ANDNOT / popcount cheap at
the graph orders this package targets.
"""

from __future__ import annotations

from typing import Iterable, Iterator

_WORD = 0xFFFFFFFFFFFFFFFF


def mask_of(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def full_mask(n: int) -> int:
    return (1 << n) - 1


def bits(mask: int) -> Iterator[int]:
    """Yield set-bit indices in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def kth_bit(mask: int, k: int) -> int:
    """Index of the k-th set bit (k 0-based). Caller ensures k < popcount."""
    base = 0
    while True:
        word = mask & _WORD
        c = word.bit_count()
        if k < c:
            while True:
                low = word & -word
                if k == 0:
                    return base + low.bit_length() - 1
                word ^= low
                k -= 1
        k -= c
        mask >>= 64
        base += 64
