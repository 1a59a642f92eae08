"""Branch and bound for maximum clique and minimum set cover on bitmask graphs.

Both solvers work on Python ints used as bitsets over at most a few
hundred elements, visit candidates in a fixed order and only replace the
incumbent on strict improvement, so their output is deterministic.
"""

from __future__ import annotations

from vce.errors import UNLIMITED, Budget


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def max_clique(adj: list[int], budget: Budget = UNLIMITED) -> list[int]:
    """Largest clique of the graph with adjacency bitmasks ``adj`` (no self loops).

    Greedy colouring of the candidate set bounds the clique size that any
    branch can still reach.
    """
    n = len(adj)
    best: list[int] = []

    def colour(P: int):
        order = []
        c = 0
        uncoloured = P
        while uncoloured:
            c += 1
            Q = uncoloured
            while Q:
                low = Q & -Q
                v = low.bit_length() - 1
                Q &= ~low & ~adj[v]
                uncoloured &= ~low
                order.append((v, c))
        return order

    def expand(R: list[int], P: int):
        nonlocal best
        budget.check("clique search")
        for v, c in reversed(colour(P)):
            if len(R) + c <= len(best):
                return
            P2 = P & adj[v]
            if P2:
                expand(R + [v], P2)
            elif len(R) + 1 > len(best):
                best = R + [v]
            P &= ~(1 << v)

    if n:
        expand([], (1 << n) - 1)
    return sorted(best)


def greedy_cover(universe: int, sets: list[int]) -> list[int]:
    """Repeatedly take the set covering most uncovered elements (lowest index on ties)."""
    chosen = []
    left = universe
    while left:
        gains = [popcount(s & left) for s in sets]
        j = max(range(len(sets)), key=lambda i: (gains[i], -i))
        if gains[j] == 0:
            raise ValueError("sets do not cover the universe")
        chosen.append(j)
        left &= ~sets[j]
    return chosen


def reduce_sets(sets: list[int]) -> list[int]:
    """Indices of sets not contained in another set (first copy kept among equals)."""
    order = sorted(range(len(sets)), key=lambda i: (-popcount(sets[i]), i))
    kept: list[int] = []
    for i in order:
        s = sets[i]
        if s and not any(s & ~sets[k] == 0 for k in kept):
            kept.append(i)
    return sorted(kept)


def min_set_cover(universe: int, sets: list[int], budget: Budget = UNLIMITED) -> list[int]:
    """Indices of a minimum-cardinality subfamily covering ``universe``.

    The incumbent starts at the greedy cover.  The lower bound is the
    larger of a counting bound and the number of uncovered elements that
    pairwise share no covering set.
    """
    if not universe:
        return []
    idx = reduce_sets([s & universe for s in sets])
    fam = [sets[i] & universe for i in idx]
    covering: dict[int, int] = {}
    for j, s in enumerate(fam):
        for e in _bits(s):
            covering[e] = covering.get(e, 0) | (1 << j)
    for e in _bits(universe):
        if e not in covering:
            raise ValueError(f"element {e} is not covered by any set")

    best = greedy_cover(universe, fam)

    def lower_bound(left: int) -> int:
        biggest = max(popcount(s & left) for s in fam)
        counting = -(-popcount(left) // biggest)
        used = 0
        independent = 0
        for e in sorted(_bits(left), key=lambda e: (popcount(covering[e]), e)):
            if covering[e] & used == 0:
                independent += 1
                used |= covering[e]
        return max(counting, independent)

    def branch(left: int, chosen: list[int]):
        nonlocal best
        budget.check("set cover search")
        if not left:
            if len(chosen) < len(best):
                best = list(chosen)
            return
        if len(chosen) + lower_bound(left) >= len(best):
            return
        e = min(_bits(left), key=lambda e: (popcount(covering[e]), e))
        options = sorted(_bits(covering[e]), key=lambda j: (-popcount(fam[j] & left), j))
        for j in options:
            chosen.append(j)
            branch(left & ~fam[j], chosen)
            chosen.pop()

    branch(universe, [])
    return sorted(idx[j] for j in best)


def min_set_cover_milp(universe: int, sets: list[int]) -> list[int]:
    """Minimum set cover via a 0-1 integer program solved by HiGHS, with zero optimality gap."""
    from scipy.optimize import Bounds, LinearConstraint, milp

    if not universe:
        return []
    elems = list(_bits(universe))
    row = {e: r for r, e in enumerate(elems)}
    M = [[0.0] * len(sets) for _ in elems]
    for j, s in enumerate(sets):
        for e in _bits(s & universe):
            M[row[e]][j] = 1.0
    if any(not any(r) for r in M):
        raise ValueError("sets do not cover the universe")
    res = milp([1.0] * len(sets), constraints=LinearConstraint(M, 1, float("inf")),
               integrality=[1] * len(sets), bounds=Bounds(0, 1),
               options={"mip_rel_gap": 0.0, "presolve": True})
    if res.status != 0:
        raise RuntimeError(f"set cover solver failed: {res.message}")
    chosen = [j for j, x in enumerate(res.x) if x > 0.5]
    left = universe
    for j in chosen:
        left &= ~sets[j]
    if left:
        raise RuntimeError("set cover solver returned a non-cover")
    return chosen
