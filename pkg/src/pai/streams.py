"""Deterministic derivation of random streams from one master seed.

Every stochastic routine in the package receives a ``numpy.random.Generator``
derived here. Substreams are addressed by an integer path fed into
``SeedSequence``'s spawn key on top of the counter-based Philox engine, so
replicate k of an experiment always sees the same stream regardless of how
many other replicates ran before it (or whether they ran at all). This is
what makes Monte Carlo loops safe to reorder or parallelize without changing
any output bit.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError

# Leading path tags: every consumer of randomness addresses its substreams
# under a distinct tag, so one master seed can drive a whole experiment
# without any two roles sharing a stream.
PATH_PASS = 0         # synthesis replicates: (PATH_PASS, replicate)
PATH_CONDITIONAL = 1  # conditional draws: (PATH_CONDITIONAL, point index)
PATH_SIMULATE = 2     # simulated datasets: (PATH_SIMULATE,)
PATH_SPLIT = 3        # data splits: (PATH_SPLIT,)
PATH_TRUTH = 4        # oracle truth draws: (PATH_TRUTH, point index)


def derive_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Return the generator for substream ``path`` under ``master_seed``.

    Parameters
    ----------
    master_seed : int
        Non-negative experiment-level seed.
    *path : int
        Optional substream coordinates, e.g. a replicate index. Distinct
        paths yield statistically independent streams; equal paths yield
        bit-identical streams.
    """
    if master_seed < 0:
        raise InputError("master seed must be non-negative")
    key = tuple(int(p) for p in path)
    if any(p < 0 for p in key):
        raise InputError("stream path components must be non-negative")
    seq = np.random.SeedSequence(int(master_seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))
