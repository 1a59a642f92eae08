"""Linear programs in equality standard form: min c.x subject to A x = b, x >= 0.

``solve_exact`` is a dense two-phase simplex over ``Fraction`` with Bland's
rule, so it terminates and its answer carries no rounding.  ``solve_float``
hands the same program to HiGHS.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpFailure(RuntimeError):
    """The float solver returned neither an optimum nor a definite verdict."""


@dataclass(frozen=True)
class LpResult:
    status: str
    value: Fraction | float | None
    x: list | None = None
    exact: bool = False


def to_fraction(v) -> Fraction:
    """Exact rational for ``v``; floats go through their shortest decimal repr (0.4 -> 2/5)."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    return Fraction(repr(float(v)))


def _pivot(T: list[list[Fraction]], r: int, c: int):
    row = T[r]
    p = row[c]
    if p != 1:
        inv = 1 / p
        T[r] = row = [v * inv for v in row]
    for i, other in enumerate(T):
        if i != r:
            f = other[c]
            if f:
                T[i] = [a - f * b for a, b in zip(other, row)]


def _simplex(T, basis, ncols):
    """Minimize the objective held in the last row (reduced costs, last entry = -value)."""
    obj = T[-1]
    while True:
        obj = T[-1]
        enter = next((j for j in range(ncols) if obj[j] < 0), None)
        if enter is None:
            return OPTIMAL
        best = None
        leave = None
        for i in range(len(T) - 1):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            return UNBOUNDED
        _pivot(T, leave, enter)
        basis[leave] = enter


def solve_exact(c, A, b) -> LpResult:
    """Exact optimum of min c.x, A x = b, x >= 0 (dense rational tableau)."""
    c = [to_fraction(v) for v in c]
    A = [[to_fraction(v) for v in row] for row in A]
    b = [to_fraction(v) for v in b]
    m, n = len(A), len(c)
    for i in range(m):
        if b[i] < 0:
            A[i] = [-v for v in A[i]]
            b[i] = -b[i]
    # phase one: artificials n .. n+m-1
    T = [A[i] + [Fraction(int(k == i)) for k in range(m)] + [b[i]] for i in range(m)]
    phase1 = [Fraction(0)] * n + [Fraction(1)] * m + [Fraction(0)]
    for i in range(m):
        phase1 = [p - t for p, t in zip(phase1, T[i])]
    T.append(phase1)
    basis = list(range(n, n + m))
    _simplex(T, basis, n + m)
    if T[-1][-1] != 0:
        return LpResult(INFEASIBLE, None, None, True)
    # drive artificials out of the basis; rows that cannot be cleared are redundant
    keep = []
    for i in range(m):
        if basis[i] >= n:
            j = next((j for j in range(n) if T[i][j] != 0), None)
            if j is None:
                continue
            _pivot(T, i, j)
            basis[i] = j
        keep.append(i)
    T = [T[i][:n] + [T[i][-1]] for i in keep]
    basis = [basis[i] for i in keep]
    obj = list(c) + [Fraction(0)]
    for i, j in enumerate(basis):
        if obj[j]:
            f = obj[j]
            obj = [o - f * t for o, t in zip(obj, T[i])]
    T.append(obj)
    if _simplex(T, basis, n) == UNBOUNDED:
        return LpResult(UNBOUNDED, None, None, True)
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        x[j] = T[i][-1]
    return LpResult(OPTIMAL, -T[-1][-1], x, True)


def solve_float(c, A, b) -> LpResult:
    """HiGHS on the same program; raises ``LpFailure`` on numerical trouble."""
    from scipy.optimize import linprog

    res = linprog(np.asarray(c, float), A_eq=np.asarray(A, float), b_eq=np.asarray(b, float),
                  bounds=(0, None), method="highs")
    if res.status == 0:
        return LpResult(OPTIMAL, float(res.fun), list(res.x), False)
    if res.status == 2:
        return LpResult(INFEASIBLE, None, None, False)
    if res.status == 3:
        return LpResult(UNBOUNDED, None, None, False)
    raise LpFailure(f"linear program solver failed: {res.message}")


def solve_linear_exact(M, b) -> list[Fraction] | None:
    """Solution of the square system ``M x = b`` over the rationals; ``None`` if singular."""
    n = len(M)
    T = [[to_fraction(v) for v in row] + [to_fraction(bv)] for row, bv in zip(M, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if T[r][col] != 0), None)
        if piv is None:
            return None
        T[col], T[piv] = T[piv], T[col]
        inv = 1 / T[col][col]
        T[col] = [v * inv for v in T[col]]
        for r in range(n):
            if r != col and T[r][col]:
                f = T[r][col]
                T[r] = [a - f * p for a, p in zip(T[r], T[col])]
    return [T[r][n] for r in range(n)]
