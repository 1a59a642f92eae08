"""Constructive extraction: random coordinate sets, recursive cube harvesting,
and greedy separation refinement.

Every reported ``achieved`` value is recomputed from the output by a
separate check, never copied from the search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from vce.dimensions import Cube, cube_is_large, embeds
from vce.errors import PreconditionError, VceError
from vce.rng import derive_seed, generator
from vce.spaces import SEPARATION_TOL, PointSet, QuasiMetric, min_pairwise_separation

DEFAULT_CUBE_CAP = 1_000_000


class ExtractionFailed(VceError):
    """All attempts were used up without meeting the target."""


class CubeOverflow(VceError):
    """The cube family outgrew its memory cap."""


@dataclass(frozen=True)
class SetSystem:
    n: int
    sets: tuple[frozenset[int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise PreconditionError("ground set needs n >= 1")
        for j, s in enumerate(self.sets):
            if not s:
                raise PreconditionError(f"set {j} is empty")
            if min(s) < 0 or max(s) >= self.n:
                raise PreconditionError(f"set {j} has elements outside 0..{self.n - 1}")

    @classmethod
    def of(cls, n: int, sets) -> "SetSystem":
        return cls(int(n), tuple(frozenset(int(i) for i in s) for s in sets))

    @classmethod
    def from_dict(cls, spec: dict[str, Any]) -> "SetSystem":
        for key in ("n", "sets"):
            if key not in spec:
                raise PreconditionError(f"set system: missing field {key!r}")
        return cls.of(spec["n"], spec["sets"])

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "sets": [sorted(s) for s in self.sets]}

    def incidence(self) -> np.ndarray:
        M = np.zeros((len(self.sets), self.n), dtype=bool)
        for j, s in enumerate(self.sets):
            M[j, list(s)] = True
        return M


@dataclass(frozen=True)
class ExtractionReport:
    output: Any
    attempts: int
    guarantee: float
    achieved: float
    seed: int
    details: dict = field(default_factory=dict)

    @property
    def meets_guarantee(self) -> bool:
        return self.achieved >= self.guarantee

    def to_dict(self) -> dict[str, Any]:
        out = self.output
        if isinstance(out, dict):
            out = {k: ([c.to_dict() for c in v] if isinstance(v, list) and v and isinstance(v[0], Cube)
                       else v.to_dict() if isinstance(v, Cube) else v) for k, v in out.items()}
        return {"output": out, "attempts": self.attempts, "guarantee": self.guarantee,
                "achieved": self.achieved, "seed": self.seed, **self.details}


# --------------------------------------------------------------------------
# random coordinate sets


def _check_coordinate_inputs(S: SetSystem, eps: float, k: int):
    if not 0 < eps <= 1:
        raise PreconditionError(f"eps must lie in (0, 1], got {eps}")
    if not 1 <= k <= S.n:
        raise PreconditionError(f"need 1 <= k <= n={S.n}, got k={k}")
    need = eps * S.n
    for j, s in enumerate(S.sets):
        if len(s) < need - 1e-9:
            raise PreconditionError(f"set {j} has {len(s)} elements, fewer than eps*n = {need:g}")


def coordinate_attempt(S: SetSystem, eps: float, k: int, seed: int, attempt: int,
                       incidence: np.ndarray | None = None) -> tuple[np.ndarray, bool]:
    """One draw: keep each coordinate with probability ``k / 2n``; report success."""
    M = S.incidence() if incidence is None else incidence
    keep = generator(seed, attempt).random(S.n) < k / (2 * S.n)
    ok = keep.sum() <= k and bool(np.all(M[:, keep].sum(axis=1) >= eps * k / 4 - 1e-12))
    return np.flatnonzero(keep), ok


def coordinate_set_ok(S: SetSystem, I, eps: float, k: int) -> bool:
    I = set(int(i) for i in I)
    return len(I) <= k and all(len(I & s) >= eps * k / 4 - 1e-12 for s in S.sets)


def extract_coordinates(S: SetSystem, eps: float, k: int, seed: int, max_attempts: int = 64) -> ExtractionReport:
    """Coordinate set ``I`` with ``|I| <= k`` meeting every set in at least ``eps k / 4`` points."""
    _check_coordinate_inputs(S, eps, k)
    if max_attempts < 1:
        raise PreconditionError("max_attempts must be >= 1")
    guarantee = eps * k / 4
    if k >= S.n:
        # all coordinates: |I| = n <= k and |I cap S| = |S| >= eps n >= eps k / 4
        I = list(range(S.n))
        return ExtractionReport(I, 1, guarantee, _min_hit(S, I), seed, {"success": True})
    M = S.incidence()
    for a in range(max_attempts):
        I, ok = coordinate_attempt(S, eps, k, seed, a, M)
        if ok and coordinate_set_ok(S, I, eps, k):
            return ExtractionReport([int(i) for i in I], a + 1, guarantee, _min_hit(S, I), seed,
                                    {"success": True})
    raise ExtractionFailed(
        f"no valid coordinate set in {max_attempts} attempts (n={S.n}, |S|={len(S.sets)}, eps={eps}, k={k})")


def _min_hit(S: SetSystem, I) -> int:
    I = set(int(i) for i in I)
    return min(len(I & s) for s in S.sets)


# --------------------------------------------------------------------------
# recursive cube harvesting


def cube_count_guarantee(m: int, alphabet_size: int, eps: float) -> int:
    """``floor(m^(1 / (2 ln(|T|^2 / eps))))`` for ``m >= 4``; 1 for two or three points."""
    if m < 2:
        return 0
    if m < 4:
        return 1
    return int(math.floor(m ** (1.0 / (2.0 * math.log(alphabet_size ** 2 / eps))) + 1e-12))


_EMPTY: frozenset = frozenset()


def _harvest(P: np.ndarray, rows: np.ndarray, m: QuasiMetric, seed: int, cap: int, counter: list[int]):
    """Cube family (each cube a frozenset of ``(coord, (b1, b2))``) embedded in ``P[rows]``."""
    if len(rows) < 2:
        return {_EMPTY}
    order = rows[generator(seed).permutation(len(rows))]
    a, b = order[0:len(order) - 1:2], order[1::2]
    X, Y = P[a], P[b]
    sep = m.separated(X, Y, 0.0)
    per_coord = sep.sum(axis=0)
    i0 = int(np.argmax(per_coord))
    if per_coord[i0] == 0:
        return {_EMPTY}
    lo = np.minimum(X[sep[:, i0], i0], Y[sep[:, i0], i0])
    hi = np.maximum(X[sep[:, i0], i0], Y[sep[:, i0], i0])
    classes, counts = np.unique(np.stack([lo, hi], axis=1), axis=0, return_counts=True)
    b1, b2 = (int(v) for v in classes[int(np.argmax(counts))])
    col = P[rows, i0]
    left = _harvest(P, rows[col == b1], m, derive_seed(seed, 1), cap, counter)
    right = _harvest(P, rows[col == b2], m, derive_seed(seed, 2), cap, counter)
    common = left & right
    out = left | right
    for c in common:
        out.add(c | {(i0, (b1, b2))})
    counter[0] = max(counter[0], len(out))
    if len(out) > cap:
        raise CubeOverflow(f"cube family exceeded the cap of {cap}")
    return out


def _to_cube(c: frozenset) -> Cube:
    items = sorted(c)
    return Cube(tuple(i for i, _ in items), tuple(p for _, p in items))


def extract_cubes(B: PointSet, m: QuasiMetric, eps: float, seed: int = 0,
                  cap: int = DEFAULT_CUBE_CAP) -> ExtractionReport:
    """Harvest large cubes embedded in ``B`` by recursive slicing on a busiest coordinate.

    Points are paired after a seeded shuffle; the coordinate separating the
    most pairs is split on its most frequent separated value pair, the two
    slices are processed recursively, and every cube found in both slices is
    extended by that coordinate.
    """
    if not B.alphabet.finite:
        raise PreconditionError("cube extraction needs a finite alphabet; discretize first")
    if not 0 < eps <= 1:
        raise PreconditionError(f"eps must lie in (0, 1], got {eps}")
    B = B.unique()
    need = math.ceil(eps * B.n - 1e-9)
    if len(B) >= 2:
        least, pair = min_pairwise_separation(B, m, 0.0)
        if least < need:
            raise PreconditionError(
                f"points {pair[0]} and {pair[1]} are separated on {least} coordinates, fewer than eps*n = {eps * B.n:g}")
    counter = [0]
    family = _harvest(B.points, np.arange(len(B)), m, seed, cap, counter)
    cubes = sorted((_to_cube(c) for c in family if c), key=lambda c: (c.sigma, c.pairs))
    verified = [c for c in cubes if embeds(c, B) and cube_is_large(c, m)]
    if len(verified) != len(cubes):
        raise VceError("internal error: a harvested cube failed the embedding re-check")
    best = max(cubes, key=lambda c: c.dimension, default=None)
    guarantee = cube_count_guarantee(len(B), B.alphabet.size, eps)
    return ExtractionReport({"cubes": cubes, "max_cube": best}, 1, guarantee, len(verified), seed,
                            {"max_dimension": best.dimension if best else 0, "points": len(B)})


# --------------------------------------------------------------------------
# separation refinement


def refinement_guarantee_shape(size: int, n: int, t: float, k: int) -> float:
    """``|A| t^k / C(n, k)``; the existential bound carries an extra fitted ``c^k``."""
    return size * t ** k / math.comb(n, k)


def refine_separation(A: PointSet, t: float, k: int) -> ExtractionReport:
    """Greedy ``A' ⊆ A`` whose distinct pairs differ by ``>= t/2`` on at least ``k`` coordinates."""
    if A.alphabet.finite:
        raise PreconditionError("refinement works on real points in [-1, 1]^n")
    if not t > 0:
        raise PreconditionError("t must be positive")
    n = A.n
    if not 1 <= k <= n // 2:
        raise PreconditionError(f"need 1 <= k <= n/2 = {n // 2}, got k={k}")
    P = A.unique().points
    for i in range(len(P) - 1):
        gap = np.abs(P[i + 1:] - P[i]).max(axis=1)
        j = int(np.argmin(gap)) if len(gap) else 0
        if len(gap) and gap[j] < t - SEPARATION_TOL:
            raise PreconditionError(f"points {i} and {i + 1 + j} are only {gap[j]:g} apart in sup norm, below t")
    half = t / 2 - SEPARATION_TOL
    kept: list[int] = []
    for i in range(len(P)):
        if kept:
            far = (np.abs(P[kept] - P[i]) >= half).sum(axis=1)
            if np.any(far < k):
                continue
        kept.append(i)
    Q = P[kept]
    for i in range(len(Q) - 1):
        if np.any((np.abs(Q[i + 1:] - Q[i]) >= half).sum(axis=1) < k):
            raise VceError("internal error: refined set fails the separation re-check")
    shape = refinement_guarantee_shape(len(P), n, t, k)
    return ExtractionReport(Q.tolist(), 1, shape, len(kept), 0, {"indices": kept, "input_size": len(P)})
