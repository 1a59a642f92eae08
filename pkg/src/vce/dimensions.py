"""Exact scaled VC dimension with cube witnesses.

A cube ``D_sigma = prod_{i in sigma} {a_i, b_i}`` embeds into ``A`` when
every one of its ``2^|sigma|`` vertices is the sigma-projection of some
point of ``A``.  ``VC(A, t)`` is the largest ``|sigma|`` carrying an
embedded cube whose pairs are all separated at level ``t``.

The search walks coordinate subsets depth-first in lexicographic order.
For a fixed sigma it keeps every viable pair assignment together with the
rows realizing each vertex ("cells"); appending a coordinate splits each
cell in two, and an assignment survives when no cell becomes empty.  The
property is downward closed in sigma, so a failed prefix prunes its whole
subtree.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from vce.errors import UNLIMITED, Budget, PreconditionError
from vce.spaces import SEPARATION_TOL, PointSet, QuasiMetric

MAX_EXACT_N = 24
MAX_EXACT_POINTS = 4096


@dataclass(frozen=True)
class Cube:
    sigma: tuple[int, ...]
    pairs: tuple[tuple, ...]

    def __post_init__(self):
        if len(self.sigma) != len(self.pairs):
            raise PreconditionError("cube needs one pair per coordinate")
        if list(self.sigma) != sorted(set(self.sigma)):
            raise PreconditionError("cube coordinates must be sorted and distinct")

    @property
    def dimension(self) -> int:
        return len(self.sigma)

    def vertices(self):
        return itertools.product(*self.pairs)

    def to_dict(self) -> dict:
        return {"sigma": list(self.sigma), "pairs": [list(p) for p in self.pairs]}


@dataclass(frozen=True)
class VcResult:
    dimension: int
    witness: Cube | None
    scale: float

    def to_dict(self) -> dict:
        w = self.witness.to_dict() if self.witness else {"sigma": [], "pairs": []}
        return {"dimension": self.dimension, "scale": self.scale, **w}


def _pyval(v):
    return v.item() if hasattr(v, "item") else v


def embeds(cube: Cube, A: PointSet) -> bool:
    """Whether every vertex of ``cube`` is a sigma-projection of a point of ``A``."""
    if any(i < 0 or i >= A.n for i in cube.sigma):
        raise PreconditionError(f"cube coordinates {cube.sigma} out of range for n={A.n}")
    if not cube.sigma:
        return len(A) > 0
    seen = {tuple(row) for row in A.points[:, list(cube.sigma)].tolist()}
    return all(tuple(v) in seen for v in cube.vertices())


def embeds_inflated(cube: Cube, A: PointSet, radius: float) -> bool:
    """``embeds`` for ``A + radius * B_inf^n``: each vertex within sup-distance ``radius`` of a point."""
    if not cube.sigma:
        return len(A) > 0
    proj = A.points[:, list(cube.sigma)].astype(float)
    for v in cube.vertices():
        if not np.any(np.all(np.abs(proj - np.asarray(v, dtype=float)) <= radius + 1e-9, axis=1)):
            return False
    return True


def cube_is_large(cube: Cube, m: QuasiMetric, level: float = 0.0) -> bool:
    return all(bool(m.separated(a, b, level)) for a, b in cube.pairs)


# --------------------------------------------------------------------------
# search engine


def _bitmask(flags: np.ndarray) -> int:
    return int.from_bytes(np.packbits(flags, bitorder="little").tobytes(), "little")


class _Coordinate:
    """Candidate values at one coordinate, each with the mask of rows that can show it."""

    __slots__ = ("index", "values", "masks", "pair_ok")

    def __init__(self, index, values, masks, pair_ok):
        self.index = index
        self.values = values
        self.masks = masks
        self.pair_ok = pair_ok  # (i, j) -> bool over indices into values, i < j


def _extend(states, coord: _Coordinate, budget: Budget):
    out = []
    seen = set()
    nv = len(coord.values)
    for labels, cells in states:
        budget.check("VC search")
        present = [k for k in range(nv) if all(c & coord.masks[k] for c in cells)]
        for x, y in itertools.combinations(present, 2):
            if not coord.pair_ok(x, y):
                continue
            mx, my = coord.masks[x], coord.masks[y]
            new = tuple(c & mx for c in cells) + tuple(c & my for c in cells)
            if new in seen:
                continue
            seen.add(new)
            out.append((labels + ((coord.values[x], coord.values[y]),), new))
    return out


def _search(coords: list[_Coordinate], all_rows: int, max_dim: int, budget: Budget):
    best_sigma: tuple[int, ...] = ()
    best_labels: tuple = ()

    def dfs(start, sigma, states):
        nonlocal best_sigma, best_labels
        for pos in range(start, len(coords)):
            if len(sigma) + len(coords) - pos <= len(best_sigma) or len(sigma) >= max_dim:
                return
            nxt = _extend(states, coords[pos], budget)
            if not nxt:
                continue
            sig = sigma + (coords[pos].index,)
            if len(sig) > len(best_sigma):
                best_sigma, best_labels = sig, nxt[0][0]
            dfs(pos + 1, sig, nxt)

    dfs(0, (), [((), (all_rows,))])
    return best_sigma, best_labels


def _check_limits(A: PointSet):
    if A.n > MAX_EXACT_N or len(A) > MAX_EXACT_POINTS:
        raise PreconditionError(
            f"exact VC search is limited to n <= {MAX_EXACT_N} and |A| <= {MAX_EXACT_POINTS} "
            f"(got n={A.n}, |A|={len(A)})")


def _point_coordinates(A: PointSet, m: QuasiMetric, t: float) -> list[_Coordinate]:
    coords = []
    for j in range(A.n):
        col = A.points[:, j]
        vals = np.unique(col)
        if vals.size < 2:
            continue
        sep = m.separated(vals[:, None], vals[None, :], t)
        if not sep.any():
            continue
        masks = [_bitmask(col == v) for v in vals]
        coords.append(_Coordinate(j, [_pyval(v) for v in vals], masks,
                                  lambda x, y, sep=sep: bool(sep[x, y])))
    return coords


def vc_scaled(A: PointSet, m: QuasiMetric, t: float, budget: Budget = UNLIMITED) -> VcResult:
    """``VC(A, t)`` with the lexicographically smallest maximal witness."""
    if not t > 0:
        raise PreconditionError(f"scale t must be > 0, got {t}")
    _check_limits(A)
    A = A.unique()
    coords = _point_coordinates(A, m, t)
    max_dim = int(math.floor(math.log2(len(A)))) if len(A) else 0
    sigma, labels = _search(coords, (1 << len(A)) - 1, max_dim, budget)
    witness = Cube(sigma, labels) if sigma else None
    return VcResult(len(sigma), witness, float(t))


def smallest_separation(A: PointSet, m: QuasiMetric) -> float:
    """Smallest positive distance between values sharing a column of ``A``; 0 if none."""
    best = math.inf
    for j in range(A.n):
        vals = np.unique(A.points[:, j])
        if vals.size < 2:
            continue
        d = m.distance(vals[:, None], vals[None, :])
        pos = d[d > 0]
        if pos.size:
            best = min(best, float(pos.min()))
    return 0.0 if best == math.inf else best


def vc_limit(A: PointSet, m: QuasiMetric, budget: Budget = UNLIMITED) -> VcResult:
    """``VC(A) = lim_{t -> 0+} VC(A, t)``."""
    t = smallest_separation(A, m)
    if t == 0.0:
        return VcResult(0, None, 0.0)
    res = vc_scaled(A, m, t, budget)
    return VcResult(res.dimension, res.witness, t)


def boolean_vc(A: PointSet, budget: Budget = UNLIMITED) -> VcResult:
    """Classical VC dimension of ``A`` in ``{0,1}^n`` via bitset projections."""
    P = A.points
    if P.size and not np.all((P == 0) | (P == 1)):
        raise PreconditionError("boolean_vc needs entries in {0, 1}")
    _check_limits(A)
    n = A.n
    weights = np.left_shift(np.uint64(1), np.arange(n, dtype=np.uint64))
    rows = np.unique((P.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)) if len(A) else np.zeros(0, np.uint64)
    size = rows.size
    max_dim = int(math.floor(math.log2(size))) if size else 0
    best: tuple[int, ...] = ()

    def shattered(mask: int, k: int) -> bool:
        return np.unique(rows & np.uint64(mask)).size == (1 << k)

    def dfs(start, sigma, mask):
        nonlocal best
        for j in range(start, n):
            if len(sigma) + n - j <= len(best) or len(sigma) >= max_dim:
                return
            budget.check("Boolean VC search")
            m2 = mask | (1 << j)
            if shattered(m2, len(sigma) + 1):
                sig = sigma + (j,)
                if len(sig) > len(best):
                    best = sig
                dfs(j + 1, sig, m2)

    dfs(0, (), 0)
    witness = Cube(best, tuple((0, 1) for _ in best)) if best else None
    return VcResult(len(best), witness, 1.0)


# --------------------------------------------------------------------------
# inflated sets  A + r B_inf^n  over the real line


def vc_inflated(A: PointSet, radius: float, t: float, budget: Budget = UNLIMITED) -> VcResult:
    """``VC(A + radius * B_inf^n, t)`` for the absolute-difference metric.

    Each point becomes a box of half-width ``radius``.  A pair ``(a, b)``
    can always be slid outward so that ``a`` is a lower box edge and ``b``
    an upper box edge without losing any box that contains it, which makes
    the candidate grid of box edges exact.
    """
    if not t > 0 or radius < 0:
        raise PreconditionError("need t > 0 and radius >= 0")
    _check_limits(A)
    A = A.unique()
    P = A.points.astype(float)
    coords = []
    for j in range(A.n):
        col = P[:, j]
        vals = np.unique(np.concatenate([col - radius, col + radius]))
        masks = [_bitmask(np.abs(col - v) <= radius + 1e-12) for v in vals]
        diff = vals[None, :] - vals[:, None]
        ok = diff >= t - SEPARATION_TOL
        if not ok.any():
            continue
        coords.append(_Coordinate(j, [float(v) for v in vals], masks,
                                  lambda x, y, ok=ok: bool(ok[x, y])))
    max_dim = int(math.floor(math.log2(len(A)))) if radius * 2 < t and len(A) else A.n
    sigma, labels = _search(coords, (1 << len(A)) - 1, max_dim, budget)
    witness = Cube(sigma, labels) if sigma else None
    return VcResult(len(sigma), witness, float(t))


def witness_is_valid(res: VcResult, A: PointSet, m: QuasiMetric, level: float) -> bool:
    """Independent re-check of a returned witness."""
    if res.witness is None:
        return res.dimension == 0
    w = res.witness
    return (w.dimension == res.dimension and embeds(w, A)
            and cube_is_large(w, m, level))


def sauer_shelah_bound(n: int, v: int) -> int:
    return sum(math.comb(n, k) for k in range(0, min(v, n) + 1))
