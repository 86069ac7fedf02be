"""Frozen numerical constants of the multilevel algorithm.

The detail bound ``c_1`` and the per-level tolerance are not given
numerically by the analysis.  Both were calibrated on the test corpus with
``demos/calibrate_constants.py`` (twice the largest observed value) and are
frozen here.
"""

from __future__ import annotations

import math

# (r, d1) -> c_1: discretized details of level k satisfy |Gamma| <= c_1 2^(-rk).
DETAIL_CONSTANTS: dict[tuple[int, int], float] = {
    (1, 1): 2.0,
    (2, 1): 2.25,
    (3, 1): 2.375,
    (1, 2): 2.0,
    (2, 2): 2.25,
}

# (r, d1) -> bound on |exact detail integral - mean of its discretization|
# in units of 2^(-rk) / n2 (rectangle rule plus codec).
DISCRETIZATION_CONSTANTS: dict[tuple[int, int], float] = {
    (1, 1): 1.39,
    (2, 1): 1.55,
    (3, 1): 1.38,
    (1, 2): 1.58,
    (2, 2): 1.56,
}

# The dithered signed estimator misses by more than 4 (pi / n + pi^2 / n^2)
# of its scale with probability below 1 - 8 / pi^2; with n >= 1 that is at
# most 4 pi (1 + pi) / n.
ESTIMATOR_FACTOR = 4 * math.pi * (1 + math.pi)


def _lookup(table: dict, r: int, d1: int, what: str) -> float:
    try:
        return table[(r, d1)]
    except KeyError:
        raise KeyError(f"no calibrated {what} for r={r}, d1={d1}; "
                       f"known: {sorted(table)}") from None


def detail_constant(r: int, d1: int) -> float:
    return _lookup(DETAIL_CONSTANTS, r, d1, "detail constant")


def tolerance_constant(r: int, d1: int) -> float:
    """``c`` in the per-level tolerance ``c 2^(-rk) / n2`` of a node's median estimate."""
    return (ESTIMATOR_FACTOR * detail_constant(r, d1)
            + _lookup(DISCRETIZATION_CONSTANTS, r, d1, "discretization constant"))
