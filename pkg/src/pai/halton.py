"""Halton low-discrepancy sequences.

Halton points serve as the canonical multivariate rank targets: the rank of
a sample row is the Halton point assigned to it by a minimum-cost matching
(see :mod:`pai.ranks`). The sequence here is the plain, unscrambled Halton
sequence over the first ``d`` primes, started at index 1 so every point lies
strictly inside the open unit hypercube. Determinism matters more than
uniformity refinements for this role, so no scrambling is applied; dimensions
above 20 are rejected because unscrambled Halton coordinates for large primes
are badly correlated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InputError

_PRIMES = (
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29,
    31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
)

MAX_DIM = len(_PRIMES)


def _is_prime(m: int) -> bool:
    if m < 2:
        return False
    k = 2
    while k * k <= m:
        if m % k == 0:
            return False
        k += 1
    return True


def halton_point(index: int, base: int) -> float:
    """Radical inverse of ``index`` in a prime ``base``.

    The digits of ``index`` in the given base are mirrored around the radix
    point: index 3 in base 2 (binary ``11``) becomes ``0.11`` = 0.75. Index 0
    would map to 0.0, outside the open interval, and is rejected.
    """
    index = int(index)
    base = int(base)
    if index < 1:
        raise InputError("Halton index must be >= 1 (0 maps outside (0,1))")
    if not _is_prime(base):
        raise InputError(f"Halton base must be a prime >= 2, got {base}")
    value = 0.0
    f = 1.0
    i = index
    while i > 0:
        f /= base
        value += f * (i % base)
        i //= base
    return value


@lru_cache(maxsize=64)
def _cached_block(n: int, d: int, offset: int) -> np.ndarray:
    out = np.empty((n, d), dtype=np.float64)
    for j in range(d):
        b = _PRIMES[j]
        for i in range(n):
            out[i, j] = halton_point(offset + i + 1, b)
    out.setflags(write=False)
    return out


def halton_block(n: int, d: int, index_offset: int = 0) -> np.ndarray:
    """First ``n`` points of the ``d``-dimensional Halton sequence.

    Row ``i`` (0-based) holds the radical inverses of index
    ``index_offset + i + 1`` in the first ``d`` primes. Rows are pairwise
    distinct and the empirical measure converges weakly to the uniform law
    on the unit cube as ``n`` grows.
    """
    if n < 1:
        raise InputError("Halton block needs n >= 1")
    if d < 1:
        raise InputError("Halton block needs d >= 1")
    if d > MAX_DIM:
        raise InputError(
            f"unsupported dimension {d}: only the first {MAX_DIM} primes are "
            "tabulated and unscrambled Halton degrades beyond that"
        )
    if index_offset < 0:
        raise InputError("index_offset must be non-negative")
    return _cached_block(int(n), int(d), int(index_offset)).copy()


@dataclass(frozen=True)
class HaltonSequence:
    """A fixed-dimension Halton stream with an optional start offset."""

    dim: int
    index_offset: int = 0
    bases: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        if self.dim < 1 or self.dim > MAX_DIM:
            raise InputError(f"dim must be in 1..{MAX_DIM}, got {self.dim}")
        if self.index_offset < 0:
            raise InputError("index_offset must be non-negative")
        object.__setattr__(self, "bases", _PRIMES[: self.dim])

    def block(self, n: int) -> np.ndarray:
        """Points ``index_offset + 1`` through ``index_offset + n``."""
        return halton_block(n, self.dim, self.index_offset)
