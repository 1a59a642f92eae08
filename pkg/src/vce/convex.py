"""Symmetric polytopes, cube-in-projection dimension, Gaussian averages and
the l1-subsystem extractor.

A body is ``K = conv(+-v_1, ..., +-v_m)``.  Its support function
``max_j |<v_j, a>|`` is the norm whose unit ball is the polar of ``K``.
Membership of ``y`` in the coordinate projection ``P_sigma K`` is decided
through the gauge

    g(y) = min sum_j |mu_j|  subject to  sum_j mu_j P_sigma v_j = y,

so ``y`` is inside iff ``g(y) <= 1``.  Small programs are solved over the
rationals; larger ones by a warm-started float simplex on the polar side,
with any decision within ``FLOAT_MARGIN`` of the boundary re-solved
exactly.
"""

from __future__ import annotations

import functools
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from vce import lp
from vce.dimensions import Cube, VcResult
from vce.errors import UNLIMITED, Budget, PreconditionError, SizeLimitError, VceError
from vce.rng import blocks, generator

EXACT_CELLS = 2000
FLOAT_MARGIN = 1e-7
MAX_CUBE_DIM = 20
MAX_SIGNS_N = 24
MC_BLOCK = 8192


class FeasibilityError(VceError):
    """The linear feasibility subroutine could not reach a verdict."""


# --------------------------------------------------------------------------
# bodies and norms


@dataclass(frozen=True, eq=False)
class SymmetricPolytope:
    generators: np.ndarray

    def __post_init__(self):
        V = np.array(self.generators, dtype=float)
        if V.ndim != 2 or V.shape[0] < 1 or V.shape[1] < 1:
            raise PreconditionError("polytope needs a non-empty m x n generator matrix")
        if not np.all(np.isfinite(V)):
            bad = np.argwhere(~np.isfinite(V))[0]
            raise PreconditionError(f"generator {bad[0]}, coordinate {bad[1]} is not finite")
        V.setflags(write=False)
        object.__setattr__(self, "generators", V)

    @property
    def n(self) -> int:
        return self.generators.shape[1]

    @classmethod
    def cross_polytope(cls, n: int) -> "SymmetricPolytope":
        return cls(np.eye(n))

    @classmethod
    def from_dict(cls, spec: dict[str, Any]) -> "SymmetricPolytope":
        if "generators" not in spec:
            raise PreconditionError("polytope: missing field 'generators'")
        gens = spec["generators"]
        n = spec.get("n", len(gens[0]) if gens else 0)
        for i, g in enumerate(gens):
            if len(g) != n:
                raise PreconditionError(f"polytope: generator {i} has length {len(g)}, expected {n}")
        return cls(np.array(gens, dtype=float).reshape(len(gens), n))

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "generators": self.generators.tolist()}

    def inside_unit_cube(self) -> bool:
        return bool(np.abs(self.generators).max() <= 1 + 1e-12)

    def support(self, a) -> np.ndarray | float:
        """``max_j |<v_j, a>|`` for a vector or for each row of a matrix."""
        a = np.asarray(a, dtype=float)
        if a.shape[-1] != self.n:
            raise PreconditionError(f"dimension mismatch: vector of length {a.shape[-1]}, body in R^{self.n}")
        vals = np.abs(a @ self.generators.T).max(axis=-1)
        return float(vals) if np.ndim(vals) == 0 else vals


@dataclass(frozen=True, eq=False)
class NormedInstance:
    """Vectors ``e_1..e_n`` under ``||x|| = max_j |<phi_j, x>|``."""

    dual_generators: np.ndarray
    label: str = ""
    body: dict | None = None

    def __post_init__(self):
        P = np.array(self.dual_generators, dtype=float)
        if P.ndim != 2 or P.shape[0] < 1 or P.shape[1] < 1:
            raise PreconditionError("instance needs a non-empty matrix of dual generators")
        if not np.all(np.isfinite(P)):
            raise PreconditionError("dual generators must be finite")
        P.setflags(write=False)
        object.__setattr__(self, "dual_generators", P)

    @property
    def n(self) -> int:
        return self.dual_generators.shape[1]

    def norm(self, a) -> np.ndarray | float:
        a = np.asarray(a, dtype=float)
        vals = np.abs(a @ self.dual_generators.T).max(axis=-1)
        return float(vals) if np.ndim(vals) == 0 else vals

    def polytope(self) -> SymmetricPolytope:
        return SymmetricPolytope(self.dual_generators)

    def reference_norm(self) -> Callable:
        """Norm of the body the generators discretize, or the generator norm itself.

        A discretized dual ball lies inside the true one, so certificates
        found with ``norm`` also hold for the reference norm.
        """
        if self.body and self.body.get("kind") == "rudelson":
            r = self.body["delta"] * math.sqrt(self.n)
            return lambda a: box_ball_support(a, r)
        return self.norm

    def in_unit_ball(self) -> bool:
        """``||e_i|| <= 1`` for every ``i``."""
        return bool(np.abs(self.dual_generators).max() <= 1 + 1e-12)

    @classmethod
    def from_dict(cls, spec: dict[str, Any]) -> "NormedInstance":
        body = spec.get("body")
        if body is not None:
            if body.get("kind") != "rudelson":
                raise PreconditionError(f"instance: unknown body kind {body.get('kind')!r}")
            for key in ("n", "delta", "seed"):
                if key not in body:
                    raise PreconditionError(f"instance: rudelson body needs field {key!r}")
            return rudelson_instance(int(body["n"]), float(body["delta"]), int(body["seed"]),
                                     body.get("sphere_points"))
        if "dual_generators" not in spec:
            raise PreconditionError("instance: missing field 'dual_generators'")
        rows = spec["dual_generators"]
        for i, r in enumerate(rows):
            if len(r) != len(rows[0]):
                raise PreconditionError(f"instance: dual generator {i} has length {len(r)}, expected {len(rows[0])}")
        return cls(np.array(rows, dtype=float), spec.get("label", ""))

    def to_dict(self) -> dict[str, Any]:
        out = {"dual_generators": self.dual_generators.tolist()}
        if self.label:
            out["label"] = self.label
        if self.body:
            out["body"] = dict(self.body)
        return out


def l1_instance(n: int) -> NormedInstance:
    """The unit vector basis of ``l_1^n``: dual generators are all sign vectors."""
    signs = 1.0 - 2.0 * ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1)
    return NormedInstance(signs, f"l1^{n}")


def rudelson_instance(n: int, delta: float, seed: int, sphere_points: int | None = None) -> NormedInstance:
    """Unit vectors of the space whose ball is ``conv(B_1^n, (delta sqrt n)^-1 B_2^n)``.

    The dual ball ``B_inf^n  cap  delta sqrt(n) B_2^n`` is replaced by the hull of
    its scaled basis vectors and of ``sphere_points`` (default ``2 n^2``) seeded
    sphere directions clipped into the cube.  Every dual generator lies in
    the true dual ball, so the resulting norm is dominated by the true one.
    """
    if not 0 < delta:
        raise PreconditionError("delta must be positive")
    r = delta * math.sqrt(n)
    count = 2 * n * n if sphere_points is None else int(sphere_points)
    g = generator(seed, 0x52).standard_normal((count, n))
    u = g / np.linalg.norm(g, axis=1, keepdims=True)
    dual = np.vstack([np.eye(n) * min(1.0, r), np.clip(r * u, -1.0, 1.0)])
    body = {"kind": "rudelson", "n": n, "delta": float(delta), "seed": int(seed), "sphere_points": count}
    return NormedInstance(dual, f"rudelson(n={n}, delta={delta})", body)


def box_ball_support(a, r: float) -> np.ndarray | float:
    """``max <a, z>`` over ``||z||_inf <= 1, ||z||_2 <= r``, row-wise.

    The maximizer saturates the ``k`` largest ``|a_i|`` and scales the rest
    to fill the ball, for the least ``k`` at which the scaled part stays in
    the box.
    """
    if not r > 0:
        raise PreconditionError("radius must be positive")
    A = np.atleast_2d(np.abs(np.asarray(a, dtype=float)))
    n = A.shape[1]
    S = -np.sort(-A, axis=1)
    head = np.hstack([np.zeros((len(S), 1)), np.cumsum(S, axis=1)])
    tail_sq = np.hstack([np.cumsum((S * S)[:, ::-1], axis=1)[:, ::-1], np.zeros((len(S), 1))])
    tail = np.sqrt(np.maximum(tail_sq, 0.0))
    out = head[:, n].copy()
    done = np.zeros(len(S), dtype=bool)
    for k in range(min(n, int(math.floor(r * r))) + 1):
        room = math.sqrt(max(r * r - k, 0.0))
        nxt = S[:, k] if k < n else np.zeros(len(S))
        fits = ~done & (room * nxt <= tail[:, k] * (1 + 1e-15))
        out[fits] = head[fits, k] + room * tail[fits, k]
        done |= fits
    return float(out[0]) if np.ndim(a) == 1 else out


def dual_norm(P: SymmetricPolytope, a) -> float:
    """``max_j |<v_j, a>|``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.shape[0] != P.n:
        raise PreconditionError(f"dimension mismatch: vector of length {a.shape[-1]}, body in R^{P.n}")
    return float(P.support(a))


# --------------------------------------------------------------------------
# gauges of projections


def projected_generators(P: SymmetricPolytope, sigma) -> np.ndarray:
    """Distinct nonzero projections ``P_sigma v_j``, one per +- pair, in sorted order."""
    W = P.generators[:, list(sigma)]
    W = W[np.any(W != 0, axis=1)]
    if not len(W):
        return W
    first = np.argmax(W != 0, axis=1)
    W = W * np.sign(W[np.arange(len(W)), first])[:, None]
    return np.unique(W, axis=0)


def _gauge_program(W, y):
    m, k = len(W), len(W[0])
    c = [1] * (2 * m)
    A = [[W[j][i] for j in range(m)] + [-W[j][i] for j in range(m)] for i in range(k)]
    return c, A, list(y)


def gauge_exact_simplex(W: np.ndarray, y) -> Fraction | None:
    """Exact gauge by the rational tableau simplex alone (slow; the reference route)."""
    Wf = [[lp.to_fraction(v) for v in row] for row in W]
    res = lp.solve_exact(*_gauge_program(Wf, [lp.to_fraction(v) for v in y]))
    return res.value if res.status == lp.OPTIMAL else None


def _polar_basis(W: np.ndarray, y: np.ndarray) -> list[tuple[int, int]] | None:
    """Signed rows ``(j, s)`` of an optimal polar vertex found by HiGHS, or ``None``."""
    from scipy.optimize import linprog

    m, k = W.shape
    A = np.vstack([W, -W])
    res = linprog(-y, A_ub=A, b_ub=np.ones(2 * m), bounds=(None, None), method="highs-ds")
    if res.status != 0:
        return None
    slack = 1 - A @ res.x
    duals = -np.asarray(res.ineqlin.marginals)
    order = sorted(np.flatnonzero(slack <= 1e-9), key=lambda i: (-duals[i], i))
    chosen: list[int] = []
    Q = np.zeros((0, k))
    for i in order:
        r = A[i] - Q.T @ (Q @ A[i])
        nr = np.linalg.norm(r)
        if nr > 1e-9:
            chosen.append(int(i))
            Q = np.vstack([Q, r / nr])
            if len(chosen) == k:
                return [(i % m, 1 if i < m else -1) for i in chosen]
    return None


class ExactRows:
    """Rows of ``W`` as integers over one power-of-ten denominator (decimal-repr convention)."""

    def __init__(self, W: np.ndarray):
        fr = [[lp.to_fraction(v) for v in row] for row in np.asarray(W, dtype=float)]
        self.fractions = fr
        self.scale = math.lcm(1, *(v.denominator for row in fr for v in row))
        self.ints = [[int(v * self.scale) for v in row] for row in fr]

    def max_abs_dot(self, z: list[Fraction]) -> Fraction:
        den = math.lcm(1, *(v.denominator for v in z))
        num = [int(v * den) for v in z]
        best = max(abs(sum(a * b for a, b in zip(row, num))) for row in self.ints)
        return Fraction(best, self.scale * den)


def gauge_exact(W: np.ndarray, y, rows: ExactRows | None = None) -> Fraction | None:
    """Exact gauge of ``y`` in ``conv(+-rows of W)``; ``None`` when ``y`` is outside the span.

    A float solve proposes an optimal basis; rational arithmetic then checks
    primal and dual feasibility of that basis, which proves its value.  If
    the check fails the rational tableau simplex decides.
    """
    W = np.asarray(W, dtype=float)
    y = np.asarray(y, dtype=float)
    if W.ndim == 2 and len(W) and np.linalg.matrix_rank(W) == W.shape[1] and np.any(y):
        basis = _polar_basis(W, y)
        if basis is not None:
            value = _verify_polar_basis(rows or ExactRows(W), y, basis)
            if value is not None:
                return value
    return gauge_exact_simplex(W, y)


def _verify_polar_basis(rows: ExactRows, y, basis) -> Fraction | None:
    B = [[s * v for v in rows.fractions[j]] for j, s in basis]
    z = lp.solve_linear_exact(B, [Fraction(1)] * len(B))
    if z is None or rows.max_abs_dot(z) > 1:
        return None
    cols = [list(c) for c in zip(*B)]
    mu = lp.solve_linear_exact(cols, [lp.to_fraction(v) for v in y])
    if mu is None or any(v < 0 for v in mu):
        return None
    return sum(mu, Fraction(0))


def gauge_float(W: np.ndarray, y) -> float:
    """HiGHS gauge; ``inf`` when ``y`` is outside the span."""
    res = lp.solve_float(*_gauge_program(np.asarray(W, float), np.asarray(y, float)))
    if res.status == lp.INFEASIBLE:
        return math.inf
    if res.status != lp.OPTIMAL:
        raise FeasibilityError(f"gauge program ended with status {res.status}")
    return float(res.value)


def _classify(g: float, h: float) -> int:
    """-1 clearly inside, +1 clearly outside, 0 too close to call in floating point."""
    if math.isinf(g):
        return 1
    v = h * g
    if v <= 1 - FLOAT_MARGIN:
        return -1
    if v >= 1 + FLOAT_MARGIN:
        return 1
    return 0


def projected_membership(P: SymmetricPolytope, sigma, y, slack: float = 0.0) -> bool:
    """Whether ``y`` lies in ``P_sigma K`` with gauge at most ``1 - slack``."""
    sigma = list(sigma)
    if any(i < 0 or i >= P.n for i in sigma) or len(set(sigma)) != len(sigma):
        raise PreconditionError(f"coordinate set {sigma} invalid for n={P.n}")
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != len(sigma):
        raise PreconditionError("y must have one entry per coordinate of sigma")
    if not sigma:
        return True
    W = projected_generators(P, sigma)
    limit = 1 - lp.to_fraction(slack)
    if not len(W):
        return bool(np.all(y == 0)) and limit >= 0
    if W.size <= EXACT_CELLS:
        g = gauge_exact(W, y)
        return g is not None and g <= limit
    g = gauge_float(W, y)
    if math.isinf(g):
        return False
    if abs(g - float(limit)) > FLOAT_MARGIN * max(1.0, abs(float(limit))):
        return g < float(limit)
    g = gauge_exact(W, y)
    return g is not None and g <= limit


class _PolarSimplex:
    """Maximizes ``<y, z>`` over ``{z : |W z| <= 1}`` walking between vertices.

    The optimum equals the gauge of ``y`` in ``conv(+-rows of W)``.  The last
    vertex is kept, so nearby objectives need few pivots.  ``W`` must have
    full column rank.  Any numerical trouble hands the objective to HiGHS
    and restarts the walk from the vertex it returns.
    """

    def __init__(self, W: np.ndarray):
        self.A = np.vstack([W, -W])
        self.k = W.shape[1]
        self.z = None
        self.basis = None
        self.inv = None

    def _restart(self, y) -> float:
        from scipy.optimize import linprog

        res = linprog(-y, A_ub=self.A, b_ub=np.ones(len(self.A)), bounds=(None, None), method="highs-ds")
        if res.status != 0:
            raise FeasibilityError(f"polar program failed: {res.message}")
        z = res.x
        slack = 1 - self.A @ z
        basis: list[int] = []
        Q = np.zeros((0, self.k))
        for i in np.argsort(slack, kind="stable"):
            if slack[i] > 1e-9:
                break
            r = self.A[i] - Q.T @ (Q @ self.A[i])
            nr = np.linalg.norm(r)
            if nr > 1e-7:
                basis.append(int(i))
                Q = np.vstack([Q, r / nr])
                if len(basis) == self.k:
                    break
        self.z = None
        if len(basis) == self.k:
            self.z, self.basis = z, basis
            self.inv = np.linalg.inv(self.A[basis])
        return float(-res.fun)

    def _crash(self, y) -> bool:
        """Reach a vertex from ``z = 0`` by moving along ``y`` projected off the tight rows."""
        A, k = self.A, self.k
        z = np.zeros(k)
        basis: list[int] = []
        for _ in range(k):
            if basis:
                Q, _ = np.linalg.qr(A[basis].T)
                d = y - Q @ (Q.T @ y)
                if np.linalg.norm(d) <= 1e-12:
                    # objective already spanned: any direction off the tight rows keeps it level
                    full, _ = np.linalg.qr(np.hstack([A[basis].T, np.eye(k)]))
                    d = full[:, len(basis)]
            else:
                d = y.astype(float)
            Ad = A @ d
            up = Ad > 1e-12
            if not up.any():
                return False
            s = np.maximum(1 - A @ z, 0)
            ratios = np.where(up, s / np.where(up, Ad, 1), np.inf)
            r = int(np.argmin(ratios))
            z = z + ratios[r] * d
            basis.append(r)
        try:
            inv = np.linalg.inv(A[basis])
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(inv)):
            return False
        self.z, self.basis, self.inv = z, basis, inv
        return True

    def _walk(self, y) -> float | None:
        A = self.A
        z, basis, inv = self.z, list(self.basis), self.inv
        stalls = 0
        for pivot in range(1, 50 * self.k + 500):
            lam = inv.T @ y
            if not np.all(np.isfinite(lam)):
                return None
            if stalls > 2 * self.k:
                # Bland's rule once progress stalls on a degenerate vertex
                neg = np.flatnonzero(lam < -1e-12)
                i = int(neg[np.argmin(np.asarray(basis)[neg])]) if neg.size else 0
            else:
                i = int(np.argmin(lam))
            if lam[i] >= -1e-12:
                if np.max(A @ z) > 1 + 1e-9:
                    return None
                self.z, self.basis, self.inv = z, basis, inv
                return float(max(y @ z, lam[lam > 0].sum()))
            d = -inv[:, i]
            Ad = A @ d
            s = np.maximum(1 - A @ z, 0)
            up = Ad > 1e-9
            if not up.any():
                return None
            ratios = np.full(len(A), np.inf)
            ratios[up] = s[up] / Ad[up]
            step = ratios.min()
            near = np.flatnonzero(ratios <= step + 1e-12)
            r = int(near[np.argmax(Ad[near])])
            step = ratios[r]
            stalls = stalls + 1 if step <= 1e-14 else 0
            z = z + step * d
            basis[i] = r
            if pivot % 32 == 0:
                try:
                    inv = np.linalg.inv(A[basis])
                except np.linalg.LinAlgError:
                    return None
            else:
                u = A[r] @ inv
                col = inv[:, i].copy()
                inv = inv - np.outer(col, u) / u[i]
                inv[:, i] = col / u[i]
        return None

    def solve(self, y: np.ndarray) -> float:
        if self.z is None:
            with np.errstate(all="ignore"):
                self._crash(y)
        if self.z is not None:
            with np.errstate(all="ignore"):
                v = self._walk(y)
            if v is not None:
                return v
        return self._restart(y)


@functools.lru_cache(maxsize=None)
def _gray_signs(k: int) -> np.ndarray:
    """The ``2^(k-1)`` sign vectors with first entry +1, in Gray-code order."""
    idx = np.arange(1 << (k - 1), dtype=np.int64)
    gray = idx ^ (idx >> 1)
    flips = (gray[:, None] >> np.arange(k - 1)) & 1
    out = np.hstack([np.ones((len(idx), 1)), 1.0 - 2.0 * flips])
    out.setflags(write=False)
    return out


def _gray_index(eps: np.ndarray) -> int:
    """Position of ``+-eps`` in ``_gray_signs(len(eps))``."""
    if eps[0] < 0:
        eps = -eps
    code = 0
    for m, e in enumerate(eps[1:]):
        if e < 0:
            code |= 1 << m
    idx, shift = code, code >> 1
    while shift:
        idx ^= shift
        shift >>= 1
    return idx


class _Exhausted(Exception):
    """The linear-programming allowance of a search ran out."""


class _Counter:
    __slots__ = ("used", "limit")

    def __init__(self, limit: int | None = None):
        self.used = 0
        self.limit = limit

    def affords(self, n: int) -> bool:
        return self.limit is None or self.used + n <= self.limit

    def spend(self, n: int = 1):
        self.used += n
        if self.limit is not None and self.used > self.limit:
            raise _Exhausted


BLOCK_MIN_DIM = 8
ASCENT_STEPS = 12


class _CubeGauges:
    """Gauges of the vertices ``eps`` (``eps_1 = +1``) of ``B_inf^sigma`` in ``P_sigma K``.

    Vertex ``h * eps`` is inside iff ``h * g(eps) <= 1``.  Gauges are computed
    lazily and kept, so a decision at one ``h`` is reused at every other.
    """

    def __init__(self, P: SymmetricPolytope, sigma: tuple[int, ...], counter: _Counter | None = None):
        self.sigma = sigma
        k = len(sigma)
        self.k = k
        self.W = projected_generators(P, sigma)
        self.signs = _gray_signs(k)
        self.g = np.full(len(self.signs), np.nan)
        self.exact_g: dict[int, Fraction | None] = {}
        self.full_rank = len(self.W) > 0 and np.linalg.matrix_rank(self.W) == k
        self.exact = self.W.size <= EXACT_CELLS
        self.simplex = _PolarSimplex(self.W) if self.full_rank else None
        self.counter = counter or _Counter()
        self._support = None
        self._bound = None
        self._rows = None

    @property
    def rows(self) -> ExactRows:
        if self._rows is None:
            self._rows = ExactRows(self.W)
        return self._rows

    def support_ratio(self) -> np.ndarray:
        """``h_K(eps) / k`` per vertex: ``h * eps`` is outside whenever ``h`` exceeds it."""
        if self._support is None:
            out = np.empty(len(self.signs))
            for s, size in blocks(len(self.signs), 4096):
                out[s:s + size] = np.abs(self.signs[s:s + size] @ self.W.T).max(axis=1) / self.k
            self._support = out
        return self._support

    def _compute(self, i: int) -> float:
        if np.isnan(self.g[i]):
            if not self.full_rank:
                self.g[i] = math.inf
            elif self.exact:
                self.counter.spend()
                e = self._exact_gauge(i)
                self.exact_g[i] = e
                self.g[i] = math.inf if e is None else float(e)
            else:
                self.counter.spend()
                self.g[i] = self.simplex.solve(self.signs[i])
        return float(self.g[i])

    def _exact_gauge(self, i: int) -> Fraction | None:
        y = self.signs[i]
        if self.simplex is not None:
            self.simplex.solve(y)
            if self.simplex.z is not None:
                m = len(self.W)
                basis = [(b % m, 1 if b < m else -1) for b in self.simplex.basis]
                value = _verify_polar_basis(self.rows, y, basis)
                if value is not None:
                    return value
        return gauge_exact(self.W, y, self.rows)

    def _exact_inside(self, i: int, h: float) -> bool:
        if i not in self.exact_g:
            self.counter.spend()
            self.exact_g[i] = self._exact_gauge(i)
        e = self.exact_g[i]
        return e is not None and lp.to_fraction(h) * e <= 1

    def _inside(self, i: int, h: float) -> bool:
        g = self._compute(i)
        if self.exact:
            return self._exact_inside(i, h)
        c = _classify(g, h)
        return self._exact_inside(i, h) if c == 0 else c < 0

    @property
    def complete(self) -> bool:
        return not np.isnan(self.g).any()

    def refute(self, h: float) -> bool:
        """Look for a vertex outside ``h P_sigma K`` by ascending along dual signs.

        The optimal polar point ``z`` of vertex ``eps`` gives
        ``g(sign z) >= ||z||_1 >= g(eps)``, so each step never lowers the gauge.
        """
        if not self.full_rank:
            return True
        ratio = self.support_ratio()
        if np.any(ratio < h * (1 - 1e-9)):
            return True
        known = np.flatnonzero(~np.isnan(self.g))
        if known.size:
            worst = known[np.argmax(self.g[known])]
            if _classify(self.g[worst], h) > 0 or (_classify(self.g[worst], h) == 0
                                                   and not self._exact_inside(int(worst), h)):
                return True
        i = int(np.argmin(ratio))
        for _ in range(ASCENT_STEPS):
            fresh = np.isnan(self.g[i])
            if not self._inside(i, h):
                return True
            if not fresh or self.simplex is None or self.simplex.z is None:
                return False
            j = _gray_index(np.where(self.simplex.z < 0, -1.0, 1.0))
            if j == i or not np.isnan(self.g[j]):
                return False
            i = j
        return False

    def block_bound(self) -> float:
        """Upper bound on the largest vertex gauge from two half-cubes (subadditivity)."""
        if self._bound is None:
            half = self.k // 2
            sim = _PolarSimplex(self.W)
            total = 0.0
            for lo, hi in ((0, half), (half, self.k)):
                best = 0.0
                for eps in _gray_signs(hi - lo):
                    y = np.zeros(self.k)
                    y[lo:hi] = eps
                    self.counter.spend()
                    best = max(best, sim.solve(y))
                total += best
            self._bound = total
        return self._bound

    def contains(self, h: float, budget: Budget = UNLIMITED) -> bool | None:
        """Whether ``h * B_inf^sigma`` sits inside ``P_sigma K``.

        ``None`` when the full vertex sweep would not fit in what is left
        of the counter's allowance.
        """
        if self.refute(h):
            return False
        unknown = int(np.isnan(self.g).sum())
        if (self.simplex is not None and self.k >= BLOCK_MIN_DIM and unknown > 1 << (self.k // 2)
                and h * self.block_bound() * (1 + FLOAT_MARGIN) <= 1):
            return True
        if not self.counter.affords(unknown):
            return None
        for i in range(len(self.signs)):
            budget.check("cube certification")
            if not self._inside(i, h):
                return False
        return True

    def level_lower(self) -> float:
        """Certified lower bound on the level from whatever has been computed."""
        if self.complete:
            return self.level()
        if self._bound is not None:
            return 1.0 / (self._bound * (1 + FLOAT_MARGIN))
        return 0.0

    def gauge_upper(self) -> float:
        """Known upper bound on the largest vertex gauge."""
        if self.complete:
            return float(self.g.max())
        return math.inf if self._bound is None else self._bound

    def max_gauge(self, budget: Budget = UNLIMITED) -> float:
        for i in range(len(self.signs)):
            budget.check("cube certification")
            self._compute(i)
        return float(self.g.max())

    def level(self, budget: Budget = UNLIMITED) -> float:
        """Largest ``h`` with ``h * B_inf^sigma`` inside (float value)."""
        g = self.max_gauge(budget)
        return 0.0 if math.isinf(g) else 1.0 / g

    def exact_level(self, budget: Budget = UNLIMITED) -> Fraction | float:
        """``level`` recomputed over the rationals when the program is small enough."""
        if not self.exact:
            return self.level(budget)
        self.max_gauge(budget)
        if not self.full_rank:
            return Fraction(0)
        vals = [self.exact_g[i] for i in range(len(self.signs))]
        if any(v is None for v in vals):
            return Fraction(0)
        return 1 / max(vals)


class _MaskTable:
    """Coordinate sets as bit masks with one value each, searchable by inclusion."""

    def __init__(self):
        self.masks = np.zeros(64, dtype=np.int64)
        self.values = np.zeros(64)
        self.size = 0

    def add(self, mask: int, value: float):
        if self.size == len(self.masks):
            self.masks = np.concatenate([self.masks, np.zeros_like(self.masks)])
            self.values = np.concatenate([self.values, np.zeros_like(self.values)])
        self.masks[self.size] = mask
        self.values[self.size] = value
        self.size += 1

    def any_superset(self, mask: int, accept) -> bool:
        m = self.masks[:self.size]
        hit = (m & mask) == mask
        return bool(np.any(accept(self.values[:self.size][hit]))) if hit.any() else False

    def any_subset(self, mask: int, accept) -> bool:
        m = self.masks[:self.size]
        hit = (m & ~mask) == 0
        return bool(np.any(accept(self.values[:self.size][hit]))) if hit.any() else False


class CubeSearch:
    """Largest coordinate sets whose centred cube fits in the projection of ``K``.

    Fitting is inherited by subsets, so a certified set vouches for all its
    subsets and a refuted one rules out all supersets; both are remembered
    across scales.  With ``solve_limit`` each ``largest`` call may spend at
    most that many linear programs; ``complete`` then tells whether the
    answer is proven maximal.
    """

    CACHE_SIZE = 4096

    def __init__(self, P: SymmetricPolytope, budget: Budget = UNLIMITED, solve_limit: int | None = None):
        if P.n > MAX_CUBE_DIM:
            raise SizeLimitError(f"cube search is limited to n <= {MAX_CUBE_DIM}, got {P.n}")
        self.P = P
        self.budget = budget
        self.solve_limit = solve_limit
        self.counter = _Counter()
        self.complete = True
        self._cubes: OrderedDict[tuple[int, ...], _CubeGauges] = OrderedDict()
        self._certified = _MaskTable()
        self._refuted = _MaskTable()

    def cube(self, sigma: tuple[int, ...]) -> _CubeGauges:
        c = self._cubes.get(sigma)
        if c is None:
            c = self._cubes[sigma] = _CubeGauges(self.P, sigma, self.counter)
            if len(self._cubes) > self.CACHE_SIZE:
                self._cubes.popitem(last=False)
        else:
            self._cubes.move_to_end(sigma)
        return c

    def _known(self, mask: int, h: float) -> bool | None:
        if self._certified.any_superset(mask, lambda lvl: h <= lvl):
            return True
        if self._refuted.any_subset(mask, lambda at: h >= at):
            return False
        return None

    def _record(self, sigma, h: float, ok: bool):
        mask = sum(1 << i for i in sigma)
        if ok:
            c = self.cube(sigma)
            self._certified.add(mask, max(h, c.level_lower() * (1 - FLOAT_MARGIN)))
        else:
            self._refuted.add(mask, h)

    def _refuted_at(self, sigma, h) -> bool:
        known = self._known(sum(1 << i for i in sigma), h)
        if known is not None:
            return not known
        if self.cube(sigma).refute(h):
            self._record(sigma, h, False)
            return True
        return False

    def _certify(self, sigma, h) -> bool:
        known = self._known(sum(1 << i for i in sigma), h)
        if known is not None:
            return known
        ok = self.cube(sigma).contains(h, self.budget)
        if ok is None:
            self.complete = False
            return False
        self._record(sigma, h, ok)
        return ok

    def largest(self, h: float, max_dim: int | None = None) -> tuple[int, ...]:
        """Lexicographically first maximum sigma with ``h B_inf^sigma`` inside ``P_sigma K``.

        When the allowance runs out the best set certified so far is
        returned and ``complete`` is cleared.
        """
        n = self.P.n
        cap = n if max_dim is None else min(max_dim, n)
        best: tuple[int, ...] = ()
        self.counter.used = 0
        self.counter.limit = self.solve_limit
        self.complete = True

        def dfs(start, sigma):
            nonlocal best
            for pos in range(start, n):
                if len(sigma) + n - pos <= len(best) or len(sigma) >= cap:
                    return
                s2 = sigma + (pos,)
                self.budget.check("cube search")
                if self._refuted_at(s2, h):
                    continue
                small = len(s2) <= 6
                if small:
                    if not self._certify(s2, h):
                        continue
                    if len(s2) > len(best):
                        best = s2
                dfs(pos + 1, s2)
                if len(s2) > len(best) and (small or self._certify(s2, h)):
                    best = s2

        try:
            dfs(0, ())
        except _Exhausted:
            self.complete = False
        finally:
            self.counter.limit = None
        return best


def convex_vc(P: SymmetricPolytope, t: float, search: CubeSearch | None = None) -> VcResult:
    """Largest ``|sigma|`` with ``(t/2) B_inf^sigma`` inside ``P_sigma K``, with its witness."""
    if not t > 0:
        raise PreconditionError(f"scale t must be > 0, got {t}")
    search = search or CubeSearch(P)
    sigma = search.largest(t / 2)
    if not sigma:
        return VcResult(0, None, float(t))
    h = t / 2
    return VcResult(len(sigma), Cube(sigma, tuple((-h, h) for _ in sigma)), float(t))


def verify_cube(P: SymmetricPolytope, sigma, h: float, slack: float = 0.0) -> bool:
    """Independent vertex-by-vertex re-check through ``projected_membership``."""
    sigma = list(sigma)
    if not sigma:
        return True
    for eps in _gray_signs(len(sigma)):
        if not projected_membership(P, sigma, h * eps, slack):
            return False
    return True


MAX_THRESHOLD_N = 8


def vc_thresholds(P: SymmetricPolytope, budget: Budget = UNLIMITED) -> list[float]:
    """``thr[k-1]``: the largest ``t`` with ``VC(K, t) >= k``, rounded down.

    ``VC(K, t)`` is then the number of thresholds ``>= t``.  Every
    coordinate set is examined, so this is limited to small ``n``.
    """
    if P.n > MAX_THRESHOLD_N:
        raise SizeLimitError(f"threshold profile is limited to n <= {MAX_THRESHOLD_N}, got {P.n}")
    best = [0.0] * P.n
    for mask in range(1, 1 << P.n):
        sigma = tuple(i for i in range(P.n) if (mask >> i) & 1)
        lvl = _CubeGauges(P, sigma).exact_level(budget)
        lvl = _float_below(lvl) if isinstance(lvl, Fraction) else lvl * (1 - FLOAT_MARGIN)
        k = len(sigma)
        best[k - 1] = max(best[k - 1], 2 * lvl)
    # fitting is inherited by subsets, so thresholds cannot increase with k
    for k in range(P.n - 2, -1, -1):
        best[k] = max(best[k], best[k + 1])
    return best


# --------------------------------------------------------------------------
# Monte Carlo averages


def _batch_norm(norm) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(norm, SymmetricPolytope):
        return norm.support
    if isinstance(norm, NormedInstance):
        return norm.norm
    if callable(norm):
        return norm
    raise PreconditionError("norm must be a polytope, a normed instance or a callable on row batches")


def _mean_stderr(total: float, total_sq: float, count: int) -> tuple[float, float]:
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0) * count / (count - 1)
    return mean, math.sqrt(var / count)


def gaussian_mean_norm(norm, n: int, trials: int, seed: int, block: int = MC_BLOCK) -> tuple[float, float]:
    """Monte Carlo ``E ||g||`` for a standard Gaussian ``g`` in ``R^n`` with its standard error.

    Block ``b`` draws from the stream ``(seed, b)``, so the estimate does not
    depend on how blocks are scheduled.
    """
    if trials < 2:
        raise PreconditionError("need at least 2 trials")
    f = _batch_norm(norm)
    total = total_sq = 0.0
    for b, (_, size) in enumerate(blocks(trials, block)):
        vals = np.asarray(f(generator(seed, b).standard_normal((size, n))), dtype=float)
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
    return _mean_stderr(total, total_sq, trials)


def sphere_mean_width(P: SymmetricPolytope, trials: int, seed: int, block: int = MC_BLOCK) -> tuple[float, float]:
    """Monte Carlo mean of the support function of ``K`` over uniform unit directions."""
    if trials < 2:
        raise PreconditionError("need at least 2 trials")
    total = total_sq = 0.0
    for b, (_, size) in enumerate(blocks(trials, block)):
        g = generator(seed, b).standard_normal((size, P.n))
        u = g / np.linalg.norm(g, axis=1, keepdims=True)
        vals = P.support(u)
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
    return _mean_stderr(total, total_sq, trials)


def dudley_bound(entropy: Callable[[float], float], cutoff: float, upper: float) -> float:
    """``int_cutoff^upper sqrt(entropy(t)) dt`` by adaptive quadrature (relative tolerance 1e-6)."""
    from scipy.integrate import quad

    if cutoff >= upper:
        return 0.0
    if cutoff < 0:
        raise PreconditionError("cutoff must be non-negative")

    def integrand(t):
        e = float(entropy(t))
        if not math.isfinite(e):
            raise PreconditionError(f"entropy is not finite at t={t}")
        return math.sqrt(max(e, 0.0))

    val, _ = quad(integrand, cutoff, upper, epsrel=1e-6, epsabs=0.0, limit=200)
    return float(val)


# --------------------------------------------------------------------------
# signs


def min_signs_norm(vectors, norm=None) -> tuple[float, tuple[int, ...]]:
    """``min_eta ||sum_i eta_i x_i||`` over sign vectors with ``eta_1 = +1``.

    ``vectors`` is an ``n x d`` array (``norm`` a callable on row batches)
    or a ``NormedInstance`` (its unit vectors under its own norm).  Ties go
    to the first sign vector in the order where +1 precedes -1.
    """
    if isinstance(vectors, NormedInstance):
        X = np.eye(vectors.n)
        f = vectors.norm
    else:
        X = np.atleast_2d(np.asarray(vectors, dtype=float))
        f = _batch_norm(norm) if norm is not None else (lambda Y: np.linalg.norm(Y, axis=1))
    n = X.shape[0]
    if n > MAX_SIGNS_N:
        raise SizeLimitError(f"sign minimization is limited to n <= {MAX_SIGNS_N}, got {n}")
    best_val, best_idx = math.inf, 0
    total = 1 << (n - 1)
    for s, size in blocks(total, 1 << 16):
        idx = np.arange(s, s + size, dtype=np.int64)
        # bit b of idx (most significant first) sets eta_{b+2} = -1, so idx order is the tie-break order
        bits = (idx[:, None] >> np.arange(n - 2, -1, -1)) & 1 if n > 1 else np.zeros((size, 0), np.int64)
        eta = np.hstack([np.ones((size, 1)), 1.0 - 2.0 * bits])
        vals = np.asarray(f(eta @ X), dtype=float)
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val, best_idx = float(vals[j]), s + j
    bits = [(best_idx >> b) & 1 for b in range(n - 2, -1, -1)]
    return best_val, tuple([1] + [1 - 2 * b for b in bits])


# --------------------------------------------------------------------------
# l1 subsystems


def default_t_grid(size: int = 32, low: float = 0.02, high: float = 1.0) -> list[float]:
    return [float(v) for v in np.geomspace(low, high, size)]


def elton_objective(s: float, t: float, exponent: float = 2.1) -> float:
    return math.sqrt(s) * t * math.log(2.0 / t) ** exponent


@dataclass(frozen=True)
class EltonCertificate:
    sigma: tuple[int, ...]
    t: float
    s: float
    delta_hat: float
    stderr: float
    slack: float
    objective: float
    exponent: float
    frontier: list = field(default_factory=list)
    seed: int = 0
    trials: int = 0

    @property
    def frontier_complete(self) -> bool:
        return all(p[3] for p in self.frontier)

    def to_dict(self) -> dict[str, Any]:
        return {"sigma": list(self.sigma), "t": self.t, "s": self.s, "delta_hat": self.delta_hat,
                "stderr": self.stderr, "slack": self.slack, "objective": self.objective,
                "exponent": self.exponent, "seed": self.seed, "trials": self.trials,
                "frontier_complete": self.frontier_complete,
                "frontier": [{"sigma": list(sg), "s": s, "t": t, "complete": ok} for sg, s, t, ok in self.frontier]}


DEFAULT_SOLVES_PER_T = 12000


def _certified_level(c: _CubeGauges, t: float, allowance: int | None, budget: Budget) -> float:
    """Best proven level of ``c`` at or above the grid value ``t`` it was certified at."""
    unknown = int(np.isnan(c.g).sum())
    if allowance is None or unknown <= allowance:
        lvl = c.exact_level(budget)
        lvl = _float_below(lvl) if isinstance(lvl, Fraction) else lvl * (1 - FLOAT_MARGIN)
    else:
        lvl = c.level_lower() * (1 - FLOAT_MARGIN)
    return max(t, min(lvl, 1.0))


def _float_below(q: Fraction) -> float:
    v = float(q)
    return v if v <= q else math.nextafter(v, -math.inf)


def elton_extract(instance: NormedInstance, trials: int, seed: int, t_grid=None,
                  exponent: float = 2.1, budget: Budget = UNLIMITED,
                  solves_per_t: int | None = DEFAULT_SOLVES_PER_T) -> EltonCertificate:
    """Coordinate set ``sigma`` and level ``t`` with ``||sum_sigma a_i x_i|| >= t ||a||_1``.

    For each grid ``t`` the largest certified ``sigma`` is sought, then
    ``t`` is raised to the best level proven for that sigma.  Among the
    resulting pairs that no other pair beats in both ``s`` and ``t``, the
    one maximizing ``sqrt(s) t log^exponent(2/t)`` is returned.

    ``solves_per_t`` caps the linear programs spent per grid value; a
    frontier entry marked incomplete is certified but not proven maximal.
    ``None`` searches exhaustively.
    """
    if not instance.in_unit_ball():
        raise PreconditionError("unit-ball hypothesis fails: some ||e_i|| exceeds 1")
    grid = sorted(default_t_grid() if t_grid is None else [float(t) for t in t_grid])
    if not grid or grid[0] <= 0 or grid[-1] > 1:
        raise PreconditionError("t grid must lie in (0, 1]")
    if solves_per_t is not None and solves_per_t < 1:
        raise PreconditionError("solves_per_t must be positive")
    n = instance.n
    mean, se = gaussian_mean_norm(instance.reference_norm(), n, trials, seed)
    delta_hat, stderr = mean / n, se / n
    search = CubeSearch(instance.polytope(), budget, solve_limit=solves_per_t)
    pairs: list[tuple[tuple[int, ...], float, bool]] = []
    covered = 0.0
    cap = None
    for t in grid:
        if t <= covered:
            continue
        sigma = search.largest(t, cap)
        complete = search.complete
        if not sigma:
            if complete:
                break
            continue
        level = _certified_level(search.cube(sigma), t, solves_per_t, budget)
        pairs.append((sigma, level, complete))
        covered = level
        if complete:
            cap = len(sigma)
    if not pairs:
        norms = np.abs(instance.dual_generators).max(axis=0)
        i = int(np.argmax(norms))
        if norms[i] <= 0:
            raise PreconditionError("all vectors are zero; no certificate exists")
        pairs = [((i,), float(norms[i]), False)]
    frontier = [(sg, len(sg) / n, t, ok) for sg, t, ok in pairs
                if not any((len(o) >= len(sg) and u >= t) and (len(o), u) != (len(sg), t) for o, u, _ in pairs)]
    best = max(frontier, key=lambda p: elton_objective(p[1], p[2], exponent))
    sigma, s, t, _ = best
    gmax = search.cube(sigma).gauge_upper()
    slack = max(0.0, 1 - t * gmax) if math.isfinite(gmax) else 0.0
    return EltonCertificate(tuple(sigma), float(t), float(s), float(delta_hat), float(stderr),
                            float(slack), elton_objective(s, t, exponent),
                            float(exponent), frontier, int(seed), int(trials))


def probe_certificate(instance: NormedInstance, cert: EltonCertificate, probes: int = 1000,
                      seed: int = 0) -> tuple[int, float]:
    """Check ``||sum a_i x_i|| >= t (1 - 1e-9)`` on random points of the l1 sphere of ``R^sigma``.

    Returns the number of violations and the smallest observed ratio.
    """
    rng = generator(seed, 0x70)
    k = len(cert.sigma)
    mags = rng.exponential(size=(probes, k))
    signs = rng.choice([-1.0, 1.0], size=(probes, k))
    a_sigma = mags * signs / mags.sum(axis=1, keepdims=True)
    a = np.zeros((probes, instance.n))
    a[:, list(cert.sigma)] = a_sigma
    vals = instance.norm(a)
    return int(np.sum(vals < cert.t * (1 - 1e-9))), float(vals.min())
