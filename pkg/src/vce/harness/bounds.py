"""Covering quantities with a known direction of error.

A suite that tests ``lhs <= C * rhs`` may replace ``lhs`` by an upper bound
and ``rhs`` by a lower bound: the fitted ``C`` can only grow.  Each helper
states which side it is safe for.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog

from vce.convex import SymmetricPolytope
from vce.coverings import MAX_EXACT, BallShape, covering_number, maximal_separated_subset
from vce.errors import UNLIMITED, Budget
from vce.spaces import Alphabet, PointSet


def cover_with_sandwich(A: PointSet, shape: BallShape, t: float, budget: Budget = UNLIMITED) -> dict:
    """Exact minimum cover over the candidate-centre family, bracketed by packing and greedy.

    Restricting centres can only raise the count, so ``value`` is an upper
    bound on ``N`` (safe on the small side of an inequality).  ``packing``
    is the largest strictly ``2t``-separated subset, a lower bound on ``N``
    for metric gauges.  ``sandwich`` asserts ``packing <= value <= greedy``.
    """
    A = A.unique()
    exact = covering_number(A, shape, t, mode="exact", budget=budget)
    greedy = covering_number(A, shape, t, mode="bounds", budget=budget)
    if shape.is_metric_on(A) and len(A) <= MAX_EXACT:
        packing = len(maximal_separated_subset(A, shape, 2 * t, "exact", strict=True, budget=budget))
    else:
        packing = 1
    return {"value": exact.value, "family": exact.family, "greedy": greedy.upper, "packing": packing,
            "sandwich": packing <= exact.value <= greedy.upper}


def _cell_meets_body(V: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> bool:
    """Whether ``conv(+-V)`` meets the box ``[lo, hi]``: some ``mu`` with ``||mu||_1 <= 1``."""
    m, n = V.shape
    # variables mu+ >= 0, mu- >= 0; point = V^T (mu+ - mu-)
    M = np.hstack([V.T, -V.T])
    A_ub = np.vstack([M, -M, np.ones((1, 2 * m))])
    b_ub = np.concatenate([hi, -lo, [1.0]])
    res = linprog(np.zeros(2 * m), A_ub=A_ub, b_ub=b_ub, bounds=(0, None), method="highs")
    return res.status == 0


CELL_TOL = 1e-9
MAX_CELLS = 1 << 14


def box_cell_cover(P: SymmetricPolytope, t: float) -> int:
    """Grid cells of side ``2t`` tiling ``[-1, 1]^n`` that meet ``K``.

    Each cell is a sup-norm ball of radius ``t`` about its centre, so the
    count is an upper bound on ``N(K, B_inf^n, t)``, and on
    ``N(K, sqrt(n) B_2^n, t)`` since ``||x||_2 / sqrt(n) <= ||x||_inf``.
    Cells are slightly enlarged before the test, which can only add cells.
    """
    per_axis = math.ceil(1.0 / t - 1e-12)
    if per_axis ** P.n > MAX_CELLS:
        raise ValueError(f"{per_axis ** P.n} cells exceed the cap of {MAX_CELLS}")
    edges = -1.0 + 2.0 * t * np.arange(per_axis)
    count = 0
    for corner in itertools.product(edges, repeat=P.n):
        lo = np.array(corner) - CELL_TOL
        if _cell_meets_body(P.generators, lo, lo + 2 * t + 2 * CELL_TOL):
            count += 1
    return count


def body_sample(P: SymmetricPolytope, rng: np.random.Generator, count: int) -> PointSet:
    """Points of ``K``: the generators, their negatives and random points of the hull."""
    V = P.generators
    w = rng.dirichlet(np.ones(2 * len(V)), size=count)
    pts = w @ np.vstack([V, -V])
    return PointSet(np.vstack([V, -V, pts]), Alphabet(None, bounded=False)).unique()


def packing_lower(A: PointSet, shape: BallShape, t: float) -> int:
    """Greedy strictly ``2t``-separated subset of ``A``: a lower bound on ``N(conv, t)`` for any superset."""
    return len(maximal_separated_subset(A, shape, 2 * t, "greedy", strict=True))
