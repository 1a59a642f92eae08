"""Finite quasi-metric alphabets, product points and separation predicates.

A quasi-metric is symmetric and reflexive but need not separate points or
satisfy the triangle inequality.  Points of ``T^n`` are rows of a matrix;
finite alphabets use integer symbols ``0..|T|-1`` and the continuous
alphabet is the interval ``[-1, 1]`` in double precision.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from vce.errors import PreconditionError

# Slack for the non-strict test d >= level on real-valued data, so that
# e.g. |0.3 - 0.1| >= 0.2 holds despite binary rounding.
SEPARATION_TOL = 1e-12

KINDS = ("zero_one_threshold", "absolute_difference", "discrete_table")


@dataclass(frozen=True)
class QuasiMetric:
    """Distance descriptor on the alphabet.

    ``zero_one_threshold(q)`` is 1 on distinct symbols at least ``q`` apart
    and 0 otherwise (``q = 0`` gives the plain 0-1 metric).
    ``absolute_difference`` is ``|a - b|``.  ``discrete_table`` looks the
    distance up in a symmetric matrix with zero diagonal.
    """

    kind: str
    q: float = 0.0
    table: tuple[tuple[float, ...], ...] | None = None
    _array: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown metric kind {self.kind!r}")
        if self.kind == "zero_one_threshold" and not self.q >= 0:
            raise PreconditionError(f"threshold q must be >= 0, got {self.q}")
        if self.kind == "discrete_table":
            if self.table is None:
                raise PreconditionError("discrete_table metric needs a table")
            d = np.asarray(self.table, dtype=float)
            if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
                raise PreconditionError("distance table must be a non-empty square matrix")
            if not np.all(np.isfinite(d)) or np.any(d < 0):
                raise PreconditionError("distance table entries must be finite and >= 0")
            if not np.array_equal(d, d.T):
                raise PreconditionError("distance table is not symmetric")
            if np.any(np.diag(d) != 0):
                raise PreconditionError("distance table must have a zero diagonal")
            if d.max() > 1:
                warnings.warn("quasi-metric diameter exceeds 1; entropy bounds assume diam(T) <= 1",
                              stacklevel=3)
            d.setflags(write=False)
            object.__setattr__(self, "_array", d)

    @classmethod
    def zero_one(cls, q: float = 0.0) -> "QuasiMetric":
        return cls("zero_one_threshold", q=float(q))

    @classmethod
    def absolute(cls) -> "QuasiMetric":
        return cls("absolute_difference")

    @classmethod
    def from_table(cls, table: Sequence[Sequence[float]]) -> "QuasiMetric":
        return cls("discrete_table", table=tuple(tuple(float(v) for v in row) for row in table))

    @classmethod
    def from_dict(cls, spec: dict[str, Any]) -> "QuasiMetric":
        kind = spec.get("kind")
        if kind == "zero_one_threshold":
            return cls.zero_one(spec.get("q", 0.0))
        if kind == "absolute_difference":
            return cls.absolute()
        if kind == "discrete_table":
            if "d" not in spec:
                raise PreconditionError("discrete_table metric: missing field 'd'")
            return cls.from_table(spec["d"])
        raise PreconditionError(f"metric: unknown kind {kind!r}")

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "zero_one_threshold":
            return {"kind": self.kind, "q": self.q}
        if self.kind == "discrete_table":
            return {"kind": self.kind, "d": [list(r) for r in self.table]}
        return {"kind": self.kind}

    @property
    def alphabet_size(self) -> int | None:
        return None if self._array is None else self._array.shape[0]

    @property
    def is_01_valued(self) -> bool:
        if self.kind == "zero_one_threshold":
            return True
        if self.kind == "discrete_table":
            return bool(np.all((self._array == 0) | (self._array == 1)))
        return False

    def distance(self, a, b) -> np.ndarray:
        """Elementwise ``d(a, b)`` with numpy broadcasting."""
        a = np.asarray(a)
        b = np.asarray(b)
        if self.kind == "absolute_difference":
            return np.abs(a.astype(float) - b)
        if self.kind == "zero_one_threshold":
            diff = np.abs(a.astype(float) - b)
            return ((a != b) & (diff >= self.q - SEPARATION_TOL)).astype(float)
        return self._array[a.astype(np.intp), b.astype(np.intp)]

    def separated(self, a, b, level: float = 0.0) -> np.ndarray:
        """``d >= level`` for ``level > 0``, else ``d > 0``."""
        d = self.distance(a, b)
        if level > 0:
            return d >= level - SEPARATION_TOL
        return d > 0

    def is_metric_on(self, values: Sequence[float]) -> bool:
        """Whether the triangle inequality holds on the given symbols."""
        v = np.asarray(sorted(set(np.asarray(values).tolist())))
        if v.size < 3:
            return True
        d = self.distance(v[:, None], v[None, :])
        # d[i,k] <= d[i,j] + d[j,k] for all i, j, k
        return bool(np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-12))


@dataclass(frozen=True)
class Alphabet:
    """``size`` symbols ``0..size-1``, or the interval ``[-1, 1]`` when ``size`` is None.

    ``bounded=False`` with no size admits any finite real (covering inputs).
    """

    size: int | None = None
    bounded: bool = True

    def __post_init__(self):
        if self.size is not None and self.size < 1:
            raise PreconditionError(f"alphabet size must be >= 1, got {self.size}")

    @property
    def finite(self) -> bool:
        return self.size is not None

    @classmethod
    def from_dict(cls, spec: dict[str, Any]) -> "Alphabet":
        kind = spec.get("kind", "finite" if "size" in spec else "interval")
        if kind == "finite":
            return cls(int(spec["size"]))
        if kind == "interval":
            return cls(None)
        if kind == "real":
            return cls(None, bounded=False)
        raise PreconditionError(f"alphabet: unknown kind {kind!r}")

    def to_dict(self) -> dict[str, Any]:
        if self.finite:
            return {"kind": "finite", "size": self.size}
        if not self.bounded:
            return {"kind": "real"}
        return {"kind": "interval", "low": -1.0, "high": 1.0}


class PointSet:
    """A finite set ``A`` of points in ``T^n``, stored as an immutable matrix."""

    __slots__ = ("points", "alphabet")

    def __init__(self, points, alphabet: Alphabet | int | None = None, *, check: bool = True):
        arr = np.array(points)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise PreconditionError("points must form a non-empty m x n matrix with n >= 1")
        if alphabet is None:
            alphabet = infer_alphabet(arr)
        elif isinstance(alphabet, int):
            alphabet = Alphabet(alphabet)
        if alphabet.finite:
            if arr.size and not np.all(np.equal(np.mod(arr, 1), 0)):
                raise PreconditionError("finite-alphabet points must have integer entries")
            arr = arr.astype(np.int64)
            if check and arr.size and (arr.min() < 0 or arr.max() >= alphabet.size):
                bad = np.argwhere((arr < 0) | (arr >= alphabet.size))[0]
                raise PreconditionError(
                    f"entry {arr[tuple(bad)]} at row {bad[0]}, column {bad[1]} "
                    f"is outside the alphabet 0..{alphabet.size - 1}")
        else:
            arr = arr.astype(float)
            if check and arr.size and not np.all(np.isfinite(arr)):
                bad = np.argwhere(~np.isfinite(arr))[0]
                raise PreconditionError(f"non-finite entry at row {bad[0]}, column {bad[1]}")
            if check and alphabet.bounded and arr.size and np.abs(arr).max() > 1 + 1e-12:
                bad = np.argwhere(~(np.abs(arr) <= 1 + 1e-12))[0]
                raise PreconditionError(
                    f"entry {arr[tuple(bad)]} at row {bad[0]}, column {bad[1]} is outside [-1, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "points", arr)
        object.__setattr__(self, "alphabet", alphabet)

    def __setattr__(self, name, value):
        raise AttributeError("PointSet is immutable")

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def __repr__(self) -> str:
        return f"PointSet(m={len(self)}, n={self.n}, alphabet={self.alphabet})"

    def unique(self) -> "PointSet":
        """Distinct rows, in order of first appearance."""
        _, idx = np.unique(self.points, axis=0, return_index=True)
        return PointSet(self.points[np.sort(idx)], self.alphabet, check=False)

    def subset(self, rows) -> "PointSet":
        return PointSet(self.points[np.asarray(rows, dtype=np.intp)], self.alphabet, check=False)

    def to_dict(self) -> dict[str, Any]:
        return {"alphabet": self.alphabet.to_dict(), "points": self.points.tolist()}

    @classmethod
    def from_dict(cls, spec: dict[str, Any]) -> "PointSet":
        if "points" not in spec:
            raise PreconditionError("point set: missing field 'points'")
        rows = spec["points"]
        lengths = {len(r) for r in rows}
        if len(lengths) > 1:
            first = len(rows[0])
            bad = next(i for i, r in enumerate(rows) if len(r) != first)
            raise PreconditionError(f"point set: row {bad} has length {len(rows[bad])}, expected {first}")
        alphabet = Alphabet.from_dict(spec["alphabet"]) if "alphabet" in spec else None
        return cls(rows, alphabet)


def infer_alphabet(arr: np.ndarray) -> Alphabet:
    if arr.size and np.all(np.equal(np.mod(arr, 1), 0)) and arr.min() >= 0:
        return Alphabet(int(arr.max()) + 1 if arr.max() >= 1 else 2)
    if arr.size and np.all(np.isfinite(arr)) and np.abs(arr).max() > 1 + 1e-12:
        return Alphabet(None, bounded=False)
    return Alphabet(None)


@dataclass(frozen=True)
class SeparationProfile:
    pair: tuple[int, int] | None
    separated_coords: frozenset[int]

    def __len__(self) -> int:
        return len(self.separated_coords)


def _check_pair(x, y, m: QuasiMetric) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise PreconditionError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size == 0:
        raise PreconditionError("points must have n >= 1 coordinates")
    size = m.alphabet_size
    if size is not None:
        for v in (x, y):
            if np.any(np.mod(v, 1) != 0) or v.min() < 0 or v.max() >= size:
                raise PreconditionError(f"entry outside alphabet 0..{size - 1}")
    return x, y


def product_distance(x, y, m: QuasiMetric) -> float:
    """Normalized Hamming-type distance ``n^-1 sum_i d(x_i, y_i)``."""
    x, y = _check_pair(x, y, m)
    return float(np.mean(m.distance(x, y)))


def separation_profile(x, y, m: QuasiMetric, level: float = 0.0,
                       pair: tuple[int, int] | None = None) -> SeparationProfile:
    if level < 0:
        raise PreconditionError("level must be >= 0")
    x, y = _check_pair(x, y, m)
    coords = np.flatnonzero(m.separated(x, y, level))
    if pair is not None:
        pair = (min(pair), max(pair))
    return SeparationProfile(pair, frozenset(int(i) for i in coords))


def separation_counts(A: PointSet, m: QuasiMetric, level: float = 0.0) -> np.ndarray:
    """Matrix of per-pair separated-coordinate counts (diagonal is zero)."""
    P = A.points
    out = np.zeros((len(A), len(A)), dtype=np.int64)
    for i in range(len(A) - 1):
        c = m.separated(P[i][None, :], P[i + 1:], level).sum(axis=1)
        out[i, i + 1:] = c
        out[i + 1:, i] = c
    return out


def min_pairwise_separation(A: PointSet, m: QuasiMetric, level: float = 0.0) -> tuple[int, tuple[int, int]]:
    """Fewest separated coordinates over distinct index pairs, with the first minimizing pair."""
    if len(A) < 2:
        raise PreconditionError("need at least two points")
    best, arg = None, None
    P = A.points
    for i in range(len(A) - 1):
        c = m.separated(P[i][None, :], P[i + 1:], level).sum(axis=1)
        j = int(np.argmin(c))
        if best is None or c[j] < best:
            best, arg = int(c[j]), (i, i + 1 + j)
    return best, arg
