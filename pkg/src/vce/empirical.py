"""Fat-shattering dimension and empirical L2 entropy of finite function samples.

A sample is an ``m x n`` matrix ``values[f][i] = f(x_i)`` with entries in
``[-1, 1]``.  A point set ``A`` is ``eps``-shattered when some level
function ``gamma`` lets every dichotomy ``I`` of ``A`` be realized by a
function with ``f(x_i) >= gamma_i + eps`` on ``I`` and ``f(x_i) <= gamma_i - eps``
off it.

Witness levels range over ``{f(x_i) - eps}``: raising a valid ``gamma_i``
until ``gamma_i + eps`` meets the smallest upper value keeps every upper
set and only enlarges the lower ones, so this grid is complete.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from vce.coverings import BallShape, CoverResult, covering_number
from vce.dimensions import vc_inflated
from vce.errors import UNLIMITED, Budget, PreconditionError, SizeLimitError
from vce.spaces import Alphabet, PointSet

MAX_SHATTER = 16
MAX_FUNCTIONS = 4096


@dataclass(frozen=True, eq=False)
class FunctionClassSample:
    values: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        V = np.array(self.values, dtype=float)
        if V.ndim != 2 or V.shape[0] < 1 or V.shape[1] < 1:
            raise PreconditionError("function sample needs m >= 1 rows and n >= 1 columns")
        bad = np.argwhere(~(np.abs(V) <= 1 + 1e-12))
        if bad.size:
            r, c = bad[0]
            raise PreconditionError(f"value {V[r, c]} at row {r}, column {c} is outside [-1, 1]")
        V.setflags(write=False)
        object.__setattr__(self, "values", V)
        if self.labels is not None and len(self.labels) != V.shape[0]:
            raise PreconditionError("one label per function is required")

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def as_points(self) -> PointSet:
        return PointSet(self.values, Alphabet(None), check=False)

    @classmethod
    def from_dict(cls, spec: dict[str, Any]) -> "FunctionClassSample":
        if "values" not in spec:
            raise PreconditionError("function sample: missing field 'values'")
        rows = spec["values"]
        for i, r in enumerate(rows):
            if len(r) != len(rows[0]):
                raise PreconditionError(f"function sample: row {i} has length {len(r)}, expected {len(rows[0])}")
        labels = spec.get("labels")
        return cls(np.array(rows, dtype=float), tuple(labels) if labels else None)

    @classmethod
    def from_csv(cls, text: str) -> "FunctionClassSample":
        rows = []
        for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
            if not row or row[0].startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise PreconditionError(f"function sample: row {lineno} has a non-numeric field") from None
            if len(rows[-1]) != len(rows[0]):
                raise PreconditionError(f"function sample: row {lineno} has {len(rows[-1])} fields, expected {len(rows[0])}")
        return cls(np.array(rows, dtype=float))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"values": self.values.tolist()}
        if self.labels:
            out["labels"] = list(self.labels)
        return out


@dataclass(frozen=True)
class ShatterWitness:
    subset: tuple[int, ...]
    gamma: tuple[float, ...]
    assignment: tuple[int, ...]
    eps: float

    def to_dict(self) -> dict[str, Any]:
        return {"subset": list(self.subset), "gamma": list(self.gamma),
                "assignment": list(self.assignment), "eps": self.eps}


def witness_is_valid(F: FunctionClassSample, w: ShatterWitness) -> bool:
    """Direct check of every dichotomy; bit ``j`` of the index puts ``subset[j]`` in ``I``."""
    k = len(w.subset)
    if len(w.assignment) != 1 << k:
        return False
    for I, f in enumerate(w.assignment):
        row = F.values[f]
        for j, i in enumerate(w.subset):
            if (I >> j) & 1:
                if row[i] < w.gamma[j] + w.eps - 1e-12:
                    return False
            elif row[i] > w.gamma[j] - w.eps + 1e-12:
                return False
    return True


def _words(flags: np.ndarray) -> np.ndarray:
    """Boolean function flags packed into little-endian uint64 words."""
    nbytes = -(-len(flags) // 64) * 8
    packed = np.packbits(flags, bitorder="little").tobytes().ljust(nbytes, b"\0")
    return np.frombuffer(packed, dtype="<u8").astype(np.uint64)


@dataclass(frozen=True)
class _Levels:
    gamma: np.ndarray   # (L,)
    lower: np.ndarray   # (L, w) functions at or below gamma - eps
    upper: np.ndarray   # (L, w) functions at or above gamma + eps


def _levels(F: FunctionClassSample, i: int, eps: float) -> _Levels:
    """Useful levels at point ``i``, one per distinct (lower, upper) pair, ascending."""
    col = F.values[:, i]
    gam, lo, up = [], [], []
    seen = set()
    for g in np.unique(col - eps):
        lower = col <= g - eps + 1e-12
        upper = col >= g + eps - 1e-12
        if lower.any() and upper.any():
            key = (lower.tobytes(), upper.tobytes())
            if key not in seen:
                seen.add(key)
                gam.append(float(g))
                lo.append(_words(lower))
                up.append(_words(upper))
    w = -(-F.m // 64)
    if not gam:
        return _Levels(np.zeros(0), np.zeros((0, w), np.uint64), np.zeros((0, w), np.uint64))
    return _Levels(np.array(gam), np.array(lo), np.array(up))


CHUNK_ELEMENTS = 1 << 22


def _extend(cells: np.ndarray, gammas: np.ndarray, lv: _Levels, budget: Budget):
    """Refine every state by every level; keep states whose cells are all non-empty.

    ``cells`` has shape (S, c, w): per state, per dichotomy, the realizing
    functions.  New dichotomies put the point below its level first, then
    above, so bit ``j`` of a cell index means the ``j``-th point is in ``I``.
    Duplicate states keep their first occurrence (state-major, level-minor).
    """
    S, c, w = cells.shape
    L = len(lv.gamma)
    if S == 0 or L == 0:
        return cells[:0].reshape(0, 2 * c, w), gammas[:0].reshape(0, gammas.shape[1] + 1)
    per_state = max(1, CHUNK_ELEMENTS // max(1, L * 2 * c * w))
    out_cells, out_src = [], []
    for s0 in range(0, S, per_state):
        budget.check("shattering search")
        blk = cells[s0:s0 + per_state]
        lo = blk[:, None, :, :] & lv.lower[None, :, None, :]
        up = blk[:, None, :, :] & lv.upper[None, :, None, :]
        new = np.concatenate([lo, up], axis=2).reshape(-1, 2 * c, w)
        ok = new.any(axis=2).all(axis=1)
        if ok.any():
            out_cells.append(new[ok])
            out_src.append(np.flatnonzero(ok) + s0 * L)
    if not out_cells:
        return cells[:0].reshape(0, 2 * c, w), gammas[:0].reshape(0, gammas.shape[1] + 1)
    new = np.concatenate(out_cells)
    src = np.concatenate(out_src)
    _, first = np.unique(new.reshape(len(new), -1), axis=0, return_index=True)
    first.sort()
    new, src = new[first], src[first]
    g = np.hstack([gammas[src // L], lv.gamma[src % L][:, None]])
    return new, g


def _start(F: FunctionClassSample):
    full = _words(np.ones(F.m, dtype=bool))
    return full[None, None, :], np.zeros((1, 0))


def _witness(subset, cells: np.ndarray, gammas: np.ndarray, eps) -> ShatterWitness:
    assignment = []
    for cell in cells:
        for k, word in enumerate(cell):
            word = int(word)
            if word:
                assignment.append(64 * k + (word & -word).bit_length() - 1)
                break
    return ShatterWitness(tuple(int(i) for i in subset), tuple(float(g) for g in gammas),
                          tuple(assignment), float(eps))


def _check_eps(eps: float):
    if not eps > 0:
        raise PreconditionError(f"eps must be > 0, got {eps}")


def is_shattered(F: FunctionClassSample, subset, eps: float, budget: Budget = UNLIMITED) -> ShatterWitness | None:
    """A verified witness that ``subset`` is ``eps``-shattered, or ``None``."""
    _check_eps(eps)
    subset = [int(i) for i in subset]
    if len(subset) > MAX_SHATTER:
        raise SizeLimitError(f"shattering checks are limited to {MAX_SHATTER} points")
    if any(i < 0 or i >= F.n for i in subset) or len(set(subset)) != len(subset):
        raise PreconditionError(f"invalid point subset {subset} for n={F.n}")
    cells, gammas = _start(F)
    for i in subset:
        cells, gammas = _extend(cells, gammas, _levels(F, i, eps), budget)
        if not len(cells):
            return None
    return _witness(subset, cells[0], gammas[0], eps)


def fat_shattering(F: FunctionClassSample, eps: float,
                   budget: Budget = UNLIMITED) -> tuple[int, ShatterWitness | None]:
    """``fat_eps`` of the sample with the lexicographically first largest witness set."""
    _check_eps(eps)
    if F.m > MAX_FUNCTIONS:
        raise SizeLimitError(f"fat-shattering search is limited to {MAX_FUNCTIONS} functions")
    levels = [_levels(F, i, eps) for i in range(F.n)]
    # 2^d dichotomies need 2^d distinct functions
    cap = min(F.n, MAX_SHATTER, int(math.floor(math.log2(F.m)))) if F.m > 1 else 0
    best: list = [(), None, None]
    n = F.n

    def dfs(start, subset, cells, gammas):
        for pos in range(start, n):
            if len(subset) + n - pos <= len(best[0]) or len(subset) >= cap:
                return
            nc, ng = _extend(cells, gammas, levels[pos], budget)
            if not len(nc):
                continue
            sub = subset + (pos,)
            if len(sub) > len(best[0]):
                best[:] = [sub, nc[0], ng[0]]
            dfs(pos + 1, sub, nc, ng)

    dfs(0, (), *_start(F))
    if not best[0]:
        return 0, None
    return len(best[0]), _witness(best[0], best[1], best[2], eps)


def vc_fat_chain(F: FunctionClassSample, t: float, budget: Budget = UNLIMITED) -> dict[str, Any]:
    """Both sides of ``VC(F + (t/8) B_inf^n, t/2) <= fat_{t/8}(F)``."""
    if not 0 < t < 1:
        raise PreconditionError(f"t must lie in (0, 1), got {t}")
    vc = vc_inflated(F.as_points(), t / 8, t / 2, budget)
    fat, _ = fat_shattering(F, t / 8, budget)
    return {"t": t, "vc_inflated": vc.dimension, "fat": fat, "holds": vc.dimension <= fat,
            "vc_witness": vc.to_dict()}


def empirical_entropy(F: FunctionClassSample, t: float, mode: str = "exact", restricted: bool = True,
                      budget: Budget = UNLIMITED) -> CoverResult:
    """Covering number of the rows of ``F`` under the normalized L2 distance.

    Centres default to the rows themselves; such a cover never beats an
    unrestricted one, so the count is a valid upper bound.
    """
    if not t > 0:
        raise PreconditionError(f"radius must be > 0, got {t}")
    return covering_number(F.as_points(), BallShape.empirical_l2(), t, restricted=restricted,
                           mode=mode, budget=budget)
