"""Independent brute-force references for the tests.

Each oracle shares no code with the package: exhaustive enumeration,
exact integer arithmetic or a generic LP solver, small inputs only.
"""

from __future__ import annotations

import itertools
import math
from functools import reduce

import numpy as np
from scipy.optimize import linprog


# --------------------------------------------------------------------------
# scaled VC dimension


def _separated(d: float, level: float | None) -> bool:
    # level None: the t -> 0 limit, any positive distance counts
    return d > 0 if level is None else d >= level - 1e-12


def brute_vc(points, dist, level: float | None) -> int:
    """Largest ``|sigma|`` such that some cube of separated pairs lies in ``P_sigma A``.

    ``dist(a, b)`` is the per-coordinate distance.  Every coordinate set and
    every choice of one pair per coordinate is tried.
    """
    P = [tuple(r) for r in np.asarray(points).tolist()]
    if len(P) < 2:
        return 0
    n = len(P[0])
    best = 0
    for k in range(1, n + 1):
        found = False
        for sigma in itertools.combinations(range(n), k):
            proj = {tuple(p[i] for i in sigma) for p in P}
            pair_lists = []
            for i in sigma:
                vals = sorted({p[i] for p in P})
                pair_lists.append([(a, b) for a, b in itertools.combinations(vals, 2) if _separated(dist(a, b), level)])
            for pairs in itertools.product(*pair_lists):
                if all(tuple(pr[bit] for pr, bit in zip(pairs, bits)) in proj
                       for bits in itertools.product((0, 1), repeat=k)):
                    found = True
                    break
            if found:
                break
        if not found:
            return best
        best = k
    return best


def brute_boolean_vc(points) -> int:
    """Largest shattered coordinate set of a 0/1 point set."""
    P = [tuple(r) for r in np.asarray(points, dtype=int).tolist()]
    n = len(P[0])
    best = 0
    for k in range(1, n + 1):
        if not any(len({tuple(p[i] for i in sigma) for p in P}) == 1 << k
                   for sigma in itertools.combinations(range(n), k)):
            break
        best = k
    return best


def sauer_shelah_sum(n: int, v: int) -> int:
    return sum(math.comb(n, k) for k in range(v + 1))


# --------------------------------------------------------------------------
# fat-shattering on a rational grid


GRID_DENOM = 40


def to_grid(values, denom: int = GRID_DENOM) -> np.ndarray:
    """Values as integers in units of ``1/denom``; raises if any is off the grid."""
    V = np.asarray(values, dtype=float) * denom
    R = np.round(V)
    if np.abs(V - R).max(initial=0.0) > 1e-6:
        raise ValueError("values are not on the grid")
    return R.astype(int)


def fat_oracle(values, eps: float, denom: int = GRID_DENOM) -> int:
    """``fat_eps`` by exhaustive search over subsets and grid levels.

    With values and ``eps`` on the ``1/denom`` grid, every witness interval
    ``[g + eps, f - eps]`` has grid endpoints, so grid levels suffice.  All
    comparisons are on integers.
    """
    F = to_grid(values, denom)
    e = int(round(eps * denom))
    if abs(e - eps * denom) > 1e-6:
        raise ValueError("eps is not on the grid")
    m, n = F.shape
    lo, hi = int(F.min()) - e, int(F.max()) + e

    # per point: the distinct label columns a level induces (1 above, 0 below, None neither)
    columns = []
    for i in range(n):
        seen = set()
        for g in range(lo, hi + 1):
            col = tuple(1 if f >= g + e else 0 if f <= g - e else None for f in F[:, i])
            if 0 in col and 1 in col:
                seen.add(col)
        # a column whose lower and upper sets are both contained in another's can only realize less
        def dominated(a, b):
            return a != b and all(x is None or x == y for x, y in zip(a, b))
        columns.append(sorted((c for c in seen if not any(dominated(c, d) for d in seen)), key=repr))

    # a state holds, per function, its label bits on the chosen points (-1: not on the correct side)
    def extend(states, i, depth):
        nxt = set()
        for st in states:
            for col in columns[i]:
                new = tuple(-1 if s < 0 or c is None else (s << 1) | c for s, c in zip(st, col))
                if len({v for v in new if v >= 0}) == 1 << depth:
                    nxt.add(new)
        return nxt

    def deepest(states, depth, start) -> int:
        best = depth
        for i in range(start, n):
            if (1 << (depth + 1)) > m:
                break
            nxt = extend(states, i, depth + 1)
            if nxt:
                best = max(best, deepest(nxt, depth + 1, i + 1))
        return best

    return deepest({(0,) * m}, 0, 0)


# --------------------------------------------------------------------------
# covering and packing


def brute_cover(points, centers, dist, t: float) -> int:
    """Fewest ``centers`` whose ``t``-balls cover ``points``; ``dist(x, y)`` is the gauge of ``x - y``."""
    P = np.asarray(points, dtype=float)
    C = np.asarray(centers, dtype=float)
    cover = [frozenset(i for i, p in enumerate(P) if dist(p, c) <= t + 1e-9) for c in C]
    everything = frozenset(range(len(P)))
    for k in range(1, len(P) + 1):
        for combo in itertools.combinations(range(len(C)), k):
            if frozenset().union(*(cover[j] for j in combo)) == everything:
                return k
    raise AssertionError("centers cannot cover the points")


def brute_packing(points, dist, sep: float, strict: bool) -> int:
    """Largest subset with pairwise gauge ``>= sep`` (``> sep`` when strict)."""
    P = np.asarray(points, dtype=float)
    far = [[(dist(P[i], P[j]) > sep + 1e-9) if strict else (dist(P[i], P[j]) >= sep - 1e-9)
            for j in range(len(P))] for i in range(len(P))]
    for k in range(len(P), 0, -1):
        for combo in itertools.combinations(range(len(P)), k):
            if all(far[a][b] for a, b in itertools.combinations(combo, 2)):
                return k
    return 0


def lp_distance(p: float, normalized: bool = False):
    def dist(x, y):
        d = np.abs(np.asarray(x) - np.asarray(y))
        v = d.max() if math.isinf(p) else (d ** p).sum() ** (1.0 / p)
        return v / len(d) ** (1.0 / p) if normalized and not math.isinf(p) else v
    return dist


# --------------------------------------------------------------------------
# convex bodies


def lp_gauge(V, y) -> float:
    """Gauge of ``y`` in ``conv(+-rows of V)`` by a generic LP; ``inf`` outside the span."""
    V = np.asarray(V, dtype=float)
    m = len(V)
    res = linprog(np.ones(2 * m), A_eq=np.hstack([V.T, -V.T]), b_eq=np.asarray(y, dtype=float),
                  bounds=(0, None), method="highs")
    return float(res.fun) if res.status == 0 else math.inf


def brute_convex_vc(V, t: float, tol: float = 1e-9) -> int:
    """Largest ``|sigma|`` with every vertex of ``(t/2)[-1,1]^sigma`` in ``P_sigma conv(+-V)``."""
    V = np.asarray(V, dtype=float)
    n = V.shape[1]
    best = 0
    for k in range(1, n + 1):
        ok = False
        for sigma in itertools.combinations(range(n), k):
            W = V[:, list(sigma)]
            if all(lp_gauge(W, (t / 2) * np.array(s)) <= 1 + tol for s in itertools.product((-1, 1), repeat=k)):
                ok = True
                break
        if not ok:
            break
        best = k
    return best


def cross_polytope_vc(n: int, t: float) -> int:
    """``min(floor(2/t), n)``: the cube ``(t/2)[-1,1]^k`` fits in ``B_1^k`` iff ``k t / 2 <= 1``."""
    return min(math.floor(2 / t + 1e-12), n)


def brute_min_signs(X, norm) -> float:
    X = np.asarray(X, dtype=float)
    return min(norm(np.array((1,) + s) @ X) for s in itertools.product((1, -1), repeat=len(X) - 1))


# --------------------------------------------------------------------------
# closed forms and folds


GAUSS_ABS_MEAN = math.sqrt(2 / math.pi)       # E|g|, g ~ N(0, 1)
GAUSS_PLANE_NORM_MEAN = math.sqrt(math.pi / 2)  # E||g||_2, g ~ N(0, I_2)


def refold_max_ratio(pairs) -> float:
    return reduce(lambda acc, r: acc if acc >= r[0] / r[1] else r[0] / r[1], pairs, -math.inf)


def cube_guarantee(m: int, alphabet: int, eps: float) -> int:
    return math.floor(math.exp(math.log(m) / (2 * math.log(alphabet ** 2 / eps))) + 1e-12)


def step_integral(scales, values, lower: float, upper: float) -> float:
    """``int_lower^upper f`` for a right-continuous step function given on ascending breakpoints."""
    total = 0.0
    pts = sorted(set([lower, upper] + [s for s in scales if lower < s < upper]))
    for a, b in zip(pts, pts[1:]):
        i = max(j for j, s in enumerate(scales) if s <= a) if scales[0] <= a else 0
        total += (b - a) * values[i]
    return total
