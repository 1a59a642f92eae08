"""Packing and covering numbers of finite point sets.

``N(A, B, t)`` is the least number of translates of ``t B`` covering ``A``;
``N'(A, B, t)`` restricts the centres to ``A``.  Arbitrary centres range
over an explicit candidate family (reported with every result); since a
smaller family can only increase the count, the value is always an upper
bound on the true ``N``.

Ball membership is closed with tolerance ``ETA``.  A set is
``eps``-separated when all pairwise distances are ``>= eps``; the packing
used as a lower bound for covers at radius ``t`` is *strictly*
``2t``-separated, which is what the triangle inequality needs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from vce.errors import UNLIMITED, Budget, PreconditionError, SizeLimitError
from vce.search import greedy_cover, max_clique, min_set_cover, min_set_cover_milp
from vce.spaces import PointSet, QuasiMetric

ETA = 1e-9
MAX_EXACT = 64
GRID_CAP = 20000


@dataclass(frozen=True)
class BallShape:
    """Unit ball of the gauge used for covering.

    ``lp``: ``B_p^n`` (``normalization="unit"``) or ``n^{1/p} B_p^n``
    (``"n_to_1_over_p"``, i.e. the normalized ``l_p`` distance).
    ``product_quasi_metric``: balls of the normalized Hamming quasi-metric.
    ``dk``: the set of vectors with at most ``k`` coordinates of modulus >= 1.
    """

    kind: str
    p: float = 2.0
    normalization: str = "unit"
    metric: QuasiMetric | None = None
    k: int = 1

    def __post_init__(self):
        if self.kind not in ("lp", "product_quasi_metric", "dk"):
            raise PreconditionError(f"unknown ball kind {self.kind!r}")
        if self.kind == "lp":
            if not self.p >= 1:
                raise PreconditionError(f"p must be >= 1, got {self.p}")
            if self.normalization not in ("unit", "n_to_1_over_p"):
                raise PreconditionError(f"unknown normalization {self.normalization!r}")
        if self.kind == "product_quasi_metric" and self.metric is None:
            raise PreconditionError("product_quasi_metric ball needs a metric")
        if self.kind == "dk" and self.k < 1:
            raise PreconditionError("dk ball needs k >= 1")

    @classmethod
    def lp(cls, p: float, normalization: str = "unit") -> "BallShape":
        return cls("lp", p=float(p), normalization=normalization)

    @classmethod
    def empirical_l2(cls) -> "BallShape":
        return cls("lp", p=2.0, normalization="n_to_1_over_p")

    @classmethod
    def hamming(cls, metric: QuasiMetric | None = None) -> "BallShape":
        return cls("product_quasi_metric", metric=metric or QuasiMetric.zero_one())

    @classmethod
    def from_dict(cls, spec: dict[str, Any]) -> "BallShape":
        kind = spec.get("kind")
        if kind == "lp":
            p = spec.get("p", 2)
            p = math.inf if str(p).lower() in ("inf", "infinity") else float(p)
            return cls.lp(p, spec.get("normalization", "unit"))
        if kind == "product_quasi_metric":
            return cls.hamming(QuasiMetric.from_dict(spec.get("metric", {"kind": "zero_one_threshold"})))
        if kind == "dk":
            return cls("dk", k=int(spec["k"]))
        raise PreconditionError(f"gauge: unknown kind {kind!r}")

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "lp":
            return {"kind": "lp", "p": "inf" if math.isinf(self.p) else self.p,
                    "normalization": self.normalization}
        if self.kind == "product_quasi_metric":
            return {"kind": self.kind, "metric": self.metric.to_dict()}
        return {"kind": "dk", "k": self.k}

    def distance(self, x, Y) -> np.ndarray:
        """Gauge of ``Y - x`` for each row of ``Y``."""
        Y = np.atleast_2d(np.asarray(Y))
        x = np.asarray(x)
        n = Y.shape[1]
        if self.kind == "product_quasi_metric":
            return self.metric.distance(x[None, :], Y).mean(axis=1)
        diff = np.abs(Y.astype(float) - x.astype(float))
        if self.kind == "dk":
            if self.k >= n:
                return np.zeros(Y.shape[0])
            return -np.sort(-diff, axis=1)[:, self.k]
        if math.isinf(self.p):
            return diff.max(axis=1)
        d = np.linalg.norm(diff, ord=self.p, axis=1)
        if self.normalization == "n_to_1_over_p":
            d = d / n ** (1.0 / self.p)
        return d

    def pairwise(self, P: np.ndarray) -> np.ndarray:
        return np.stack([self.distance(P[i], P) for i in range(P.shape[0])]) if len(P) else np.zeros((0, 0))

    def is_metric_on(self, A: PointSet) -> bool:
        """Whether the triangle inequality holds, so packing/covering duality applies."""
        if self.kind == "lp":
            return True
        if self.kind == "dk":
            return False
        return self.metric.is_metric_on(np.unique(A.points))

    def radius_per_coordinate(self, n: int) -> float | None:
        """Half-width of the box that the unit ball equals, when it is a box."""
        if self.kind != "lp":
            return None
        if math.isinf(self.p):
            return 1.0
        if n == 1:
            return 1.0
        return None


@dataclass(frozen=True)
class CoverResult:
    value: int
    mode: str
    centers: list | None = None
    restricted_centers: bool = False
    family: str = "A"
    lower: int | None = None
    upper: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"value": self.value, "mode": self.mode, "lower": self.lower, "upper": self.upper,
                "restricted_centers": self.restricted_centers, "center_family": self.family,
                "centers": self.centers}


@dataclass(frozen=True)
class PackingBracket:
    packing: int
    packing_exact: bool
    cover_lower: int
    cover_upper: int
    cover_upper_exact: bool
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"packing": self.packing, "packing_exact": self.packing_exact,
                "cover_lower": self.cover_lower, "cover_upper": self.cover_upper,
                "cover_upper_exact": self.cover_upper_exact, "checks": self.checks}


def _validate_radius(t: float):
    if not t > 0:
        raise PreconditionError(f"radius must be > 0, got {t}")


def separation_graph(A: PointSet, shape: BallShape, eps: float, strict: bool = False) -> list[int]:
    """Adjacency bitmasks of "far apart" pairs: ``>= eps`` or, if strict, ``> eps``."""
    D = shape.pairwise(A.points)
    far = D > eps + 2 * ETA if strict else D >= eps - ETA
    np.fill_diagonal(far, False)
    return [int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little") for row in far]


def maximal_separated_subset(A: PointSet, shape: BallShape, eps: float, strategy: str = "greedy",
                             strict: bool = False, budget: Budget = UNLIMITED) -> list[int]:
    """Row indices of an ``eps``-separated subset of ``A``.

    ``greedy`` scans ``A`` in input order and is maximal; ``exact`` is a
    maximum one (clique search, ``|A| <= 64``).
    """
    _validate_radius(eps)
    if strategy == "greedy":
        kept: list[int] = []
        for i in range(len(A)):
            if not kept:
                kept.append(i)
                continue
            d = shape.distance(A.points[i], A.points[kept])
            ok = d > eps + 2 * ETA if strict else d >= eps - ETA
            if np.all(ok):
                kept.append(i)
        return kept
    if strategy == "exact":
        if len(A) > MAX_EXACT:
            raise SizeLimitError(f"exact packing is limited to |A| <= {MAX_EXACT}, got {len(A)}")
        return max_clique(separation_graph(A, shape, eps, strict), budget)
    raise PreconditionError(f"unknown strategy {strategy!r}")


def candidate_centers(A: PointSet, shape: BallShape, t: float, restricted: bool) -> tuple[np.ndarray, str]:
    """Centres available to the cover and the name of their family."""
    P = A.points
    if restricted:
        return P, "A"
    n = A.n
    half = shape.radius_per_coordinate(n)
    if half is not None:
        # a box cover of S can be slid so that each lower face touches min(S)
        cols = [np.unique(P[:, j].astype(float)) + t * half for j in range(n)]
        if math.prod(len(c) for c in cols) <= GRID_CAP:
            grid = np.array(list(itertools.product(*cols)), dtype=float).reshape(-1, n)
            return np.vstack([P.astype(float), grid]), "A+box-grid"
    if shape.kind == "product_quasi_metric" and A.alphabet.finite and A.alphabet.size ** n <= GRID_CAP:
        return np.array(list(itertools.product(range(A.alphabet.size), repeat=n))).reshape(-1, n), "T^n"
    if shape.kind == "lp":
        mids = [(P[i] + P[j]) / 2.0 for i, j in itertools.combinations(range(len(P)), 2)]
        if mids:
            return np.vstack([P.astype(float), np.array(mids)]), "A+midpoints"
    return P, "A"


def _coverage(A: PointSet, centers: np.ndarray, shape: BallShape, t: float) -> list[int]:
    out = []
    for c in centers:
        inside = shape.distance(c, A.points) <= t + ETA
        out.append(int.from_bytes(np.packbits(inside, bitorder="little").tobytes(), "little"))
    return out


def _as_list(row) -> list:
    return [v.item() if hasattr(v, "item") else v for v in row]


def covering_number(A: PointSet, shape: BallShape, t: float, restricted: bool = False,
                    mode: str = "exact", budget: Budget = UNLIMITED, solver: str = "milp") -> CoverResult:
    """``N(A, shape, t)`` (or ``N'`` when ``restricted``), exact or as a bracket.

    ``solver`` picks the exact engine: ``milp`` (HiGHS integer program) or
    ``branch`` (combinatorial branch and bound).
    """
    _validate_radius(t)
    A = A.unique()
    universe = (1 << len(A)) - 1
    centers, family = candidate_centers(A, shape, t, restricted)
    sets = _coverage(A, centers, shape, t)
    greedy = greedy_cover(universe, sets)
    if mode == "exact":
        if len(A) > MAX_EXACT:
            raise SizeLimitError(f"exact covering is limited to |A| <= {MAX_EXACT}, got {len(A)}")
        if solver == "milp":
            chosen = min_set_cover_milp(universe, sets)
        elif solver == "branch":
            chosen = min_set_cover(universe, sets, budget)
        else:
            raise PreconditionError(f"unknown solver {solver!r}")
        return CoverResult(len(chosen), "exact", [_as_list(centers[j]) for j in chosen],
                           restricted, family, len(chosen), len(chosen))
    if mode == "bounds":
        if shape.is_metric_on(A):
            lower = len(maximal_separated_subset(A, shape, 2 * t, "greedy", strict=True))
        else:
            lower = 1
        return CoverResult(len(greedy), "upper_bound", [_as_list(centers[j]) for j in greedy],
                           restricted, family, lower, len(greedy))
    raise PreconditionError(f"unknown mode {mode!r}")


def packing_cover_bracket(A: PointSet, shape: BallShape, t: float,
                          budget: Budget = UNLIMITED) -> PackingBracket:
    """Maximum ``t``-packing ``M(t)`` with a two-sided bracket on ``N(t)``.

    Upper: a maximal ``t``-packing is itself a restricted cover, so
    ``N(t) <= N'(t) <= M(t)``.  Lower: for metric gauges a strictly
    ``2t``-separated set needs one ball per point.
    """
    _validate_radius(t)
    A = A.unique()
    small = len(A) <= MAX_EXACT
    M = len(maximal_separated_subset(A, shape, t, "exact" if small else "greedy", budget=budget))
    if shape.is_metric_on(A):
        lower = len(maximal_separated_subset(A, shape, 2 * t, "exact" if small else "greedy",
                                             strict=True, budget=budget))
    else:
        lower = 1
    upper = covering_number(A, shape, t, restricted=True, mode="exact" if small else "bounds", budget=budget)
    checks = {"restricted_cover_le_packing": upper.value <= M if small else None,
              "lower_le_upper": lower <= upper.value}
    return PackingBracket(M, small, lower, upper.value, small, checks)


def empirical_l2_distance(f, g) -> float:
    """``(n^-1 sum_i (f_i - g_i)^2)^{1/2}``."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape or f.ndim != 1:
        raise PreconditionError(f"length mismatch: {f.shape} vs {g.shape}")
    return float(np.sqrt(np.mean((f - g) ** 2)))
