"""Exact balanced linear sum assignment.

Cost matrices are plain square ``numpy`` arrays of non-negative finite reals;
``solve_lsap`` returns the minimum-cost perfect matching as a column-to-row
permutation. The solver is scipy's shortest-augmenting-path implementation
(Jonker-Volgenant family, worst case O(n^3)); this module owns validation,
the permutation orientation used throughout the package, and desk-scale size
guards. Tie-breaking among equally optimal permutations follows the solver's
deterministic scan order and is not part of the contract - only the total
cost is.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InputError

# Above the soft limit an n^3 solve is minutes of work; above the hard limit
# it is no longer a desk-scale computation at all.
SOFT_SIZE_LIMIT = 4096
HARD_SIZE_LIMIT = 16384


@dataclass(frozen=True)
class Assignment:
    """A perfect matching: column ``i`` is assigned row ``perm[i]``."""

    perm: np.ndarray
    total_cost: float

    @property
    def size(self) -> int:
        return self.perm.shape[0]


def _validate_costs(costs: np.ndarray) -> np.ndarray:
    costs = np.asarray(costs, dtype=np.float64)
    if costs.ndim != 2 or costs.shape[0] != costs.shape[1]:
        raise InputError(f"cost matrix must be square 2-D, got shape {costs.shape}")
    if costs.size and not np.all(np.isfinite(costs)):
        raise InputError("cost matrix contains NaN or infinite entries")
    if costs.size and costs.min() < 0:
        raise InputError("cost matrix entries must be non-negative")
    return costs


def solve_lsap(costs: np.ndarray) -> Assignment:
    """Minimum-cost perfect matching of a square cost matrix.

    Returns an :class:`Assignment` whose ``perm`` maps each column index to
    its assigned row, with ``total_cost = sum(costs[perm[i], i])`` minimal
    over all permutations. An empty matrix yields the empty assignment with
    cost 0.
    """
    costs = _validate_costs(costs)
    n = costs.shape[0]
    if n == 0:
        return Assignment(perm=np.empty(0, dtype=np.intp), total_cost=0.0)
    if n > HARD_SIZE_LIMIT:
        raise InputError(
            f"assignment size {n} exceeds the hard limit {HARD_SIZE_LIMIT}"
        )
    if n > SOFT_SIZE_LIMIT:
        warnings.warn(
            f"assignment size {n} exceeds {SOFT_SIZE_LIMIT}; an O(n^3) solve "
            "at this scale may take a long time",
            RuntimeWarning,
            stacklevel=2,
        )
    row_ind, col_ind = linear_sum_assignment(costs)
    perm = np.empty(n, dtype=np.intp)
    perm[col_ind] = row_ind
    total = float(costs[perm, np.arange(n)].sum())
    return Assignment(perm=perm, total_cost=total)


def rank_cost_matrix(points: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Cost matrix ``C[i, j] = ||points_i - targets_j||^2 / n``.

    This is the matching cost between sample rows and their candidate rank
    targets; dividing by ``n`` makes the optimal total an average squared
    distance.
    """
    points = np.asarray(points, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if points.ndim != 2 or targets.ndim != 2:
        raise InputError("points and targets must be 2-D matrices")
    if points.shape != targets.shape:
        raise InputError(
            f"points shape {points.shape} != targets shape {targets.shape}"
        )
    n = points.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    diff = points[:, None, :] - targets[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff) / n
