"""Empirical null distributions and Monte Carlo p-values.

An :class:`EmpiricalDistribution` is the sorted vector of statistic values
computed on independent synthetic replicates. P-values come in two flavours:
``RAW`` reproduces the plain empirical-CDF rules (and can return 0 when the
observed statistic is beyond every draw), while ``PLUS_ONE`` - the default
everywhere - counts the observed statistic as one extra draw, which keeps
p-values in ``[1/(D+1), 1]`` and gives exact finite-sample level control.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError


class Sidedness(enum.Enum):
    TWO_SIDED = "two"
    UPPER_TAIL = "upper"
    LOWER_TAIL = "lower"


class Correction(enum.Enum):
    RAW = "raw"
    PLUS_ONE = "plus-one"


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted Monte Carlo draws of a scalar statistic."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if values.shape[0] < 2:
            raise InputError("an empirical distribution needs at least 2 draws")
        if not np.all(np.isfinite(values)):
            raise InputError("draws must be finite")
        values = np.sort(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return int(self.values.shape[0])

    def cdf(self, x: float) -> float:
        return cdf_eval(self, x)

    def quantile(self, q) -> np.ndarray:
        """Linear-interpolated order-statistic quantile(s)."""
        return np.quantile(self.values, q)


def cdf_eval(dist: EmpiricalDistribution, x: float) -> float:
    """Fraction of draws that are <= ``x``."""
    if not math.isfinite(x):
        raise InputError("cdf evaluation point must be finite")
    return float(np.searchsorted(dist.values, x, side="right")) / dist.size


def p_value(
    dist: EmpiricalDistribution,
    statistic: float,
    sidedness: Sidedness = Sidedness.TWO_SIDED,
    correction: Correction = Correction.PLUS_ONE,
) -> float:
    """P-value of ``statistic`` against the empirical null.

    RAW mode: lower tail ``F(T)``, upper tail ``1 - F(T)``, two-sided
    ``2 min(F(T), 1 - F(T))``, with ``F`` the draws' empirical CDF.
    PLUS_ONE mode counts the observed statistic as an extra draw in the
    relevant tail; the two-sided value is ``min(1, 2 min(upper, lower))``.
    """
    if not math.isfinite(statistic):
        raise InputError("test statistic must be finite")
    values = dist.values
    D = dist.size
    n_le = int(np.searchsorted(values, statistic, side="right"))
    n_ge = D - int(np.searchsorted(values, statistic, side="left"))
    if correction is Correction.RAW:
        F = n_le / D
        if sidedness is Sidedness.LOWER_TAIL:
            return F
        if sidedness is Sidedness.UPPER_TAIL:
            return 1.0 - F
        return min(1.0, 2.0 * min(F, 1.0 - F))
    upper = (1 + n_ge) / (D + 1)
    lower = (1 + n_le) / (D + 1)
    if sidedness is Sidedness.LOWER_TAIL:
        return lower
    if sidedness is Sidedness.UPPER_TAIL:
        return upper
    return min(1.0, 2.0 * min(upper, lower))
