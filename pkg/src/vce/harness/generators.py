"""Seeded random instances for the verification suites.

Every generator takes a ``numpy.random.Generator`` and returns a value
that satisfies the preconditions listed in its docstring, so a suite
never feeds an inequality an instance outside its hypotheses.
"""

from __future__ import annotations

import math

import numpy as np

from vce.convex import NormedInstance, SymmetricPolytope
from vce.empirical import FunctionClassSample
from vce.spaces import Alphabet, PointSet, QuasiMetric


def boolean_set(rng: np.random.Generator, n: int, size: int) -> PointSet:
    """``size`` distinct points of ``{0,1}^n`` (capped at ``2^n``)."""
    size = min(size, 1 << n)
    codes = rng.choice(1 << n, size=size, replace=False)
    bits = (np.sort(codes)[:, None] >> np.arange(n)) & 1
    return PointSet(bits, Alphabet(2))


def quasi_metric_table(rng: np.random.Generator, size: int, zero_prob: float = 0.2) -> QuasiMetric:
    """Symmetric table with zero diagonal, entries in ``{0, 0.25, .., 1}``: diameter <= 1.

    Off-diagonal zeros are allowed, so distinct symbols may be unseparated.
    """
    d = np.zeros((size, size))
    for a in range(size):
        for b in range(a + 1, size):
            v = 0.0 if rng.random() < zero_prob else float(rng.integers(1, 5)) / 4
            d[a, b] = d[b, a] = v
    if size > 1 and not d.any():
        d[0, 1] = d[1, 0] = 1.0
    return QuasiMetric.from_table(d.tolist())


def separated_set(rng: np.random.Generator, n: int, alphabet: int, metric: QuasiMetric, eps: float,
                  max_size: int, draws: int | None = None, level: float = 0.0) -> PointSet:
    """Greedy rejection sampling of uniform draws from ``T^n``.

    A draw is kept when it is separated (``d > 0``, or ``d >= level``) from
    every kept point on at least ``ceil(eps n)`` coordinates, so the result
    satisfies the pairwise separation hypothesis exactly.
    """
    need = math.ceil(eps * n - 1e-9)
    draws = draws if draws is not None else 8 * max_size
    kept = np.zeros((0, n), dtype=np.int64)
    for _ in range(draws):
        if len(kept) >= max_size:
            break
        x = rng.integers(0, alphabet, size=n)
        if len(kept):
            sep = metric.separated(kept, x[None, :], level).sum(axis=1)
            if sep.min() < need:
                continue
        kept = np.vstack([kept, x[None, :]])
    return PointSet(kept, Alphabet(alphabet))


def box_points(rng: np.random.Generator, n: int, size: int, step: float | None = None) -> PointSet:
    """Uniform points of ``[-1, 1]^n``, optionally rounded to a grid of ``step``."""
    P = rng.uniform(-1.0, 1.0, size=(size, n))
    if step:
        P = np.clip(np.round(P / step) * step, -1.0, 1.0)
    return PointSet(P, Alphabet(None)).unique()


def polytope(rng: np.random.Generator, n: int, m: int) -> SymmetricPolytope:
    """Gaussian generators scaled to sup-norm 1: ``K`` lies in ``B_inf^n`` and touches its boundary."""
    V = rng.standard_normal((m, n))
    V /= np.abs(V).max(axis=1, keepdims=True)
    return SymmetricPolytope(V)


def normed_instance(rng: np.random.Generator, n: int, m: int) -> NormedInstance:
    """Gaussian dual generators with every column scaled to sup-norm 1, so ``||e_i|| = 1``."""
    Phi = rng.standard_normal((m, n))
    Phi /= np.abs(Phi).max(axis=0, keepdims=True)
    return NormedInstance(Phi, f"gaussian(n={n}, m={m})")


def function_class(rng: np.random.Generator, m: int, n: int, components: int = 3,
                   spread: float = 0.35, step: float | None = 0.05) -> FunctionClassSample:
    """Rows drawn around a few Gaussian centres, clipped to ``[-1, 1]``.

    With ``step`` the values are rounded to multiples of it, which keeps
    witness levels on a known finite grid.
    """
    centres = rng.uniform(-0.8, 0.8, size=(components, n))
    which = rng.integers(0, components, size=m)
    V = np.clip(centres[which] + spread * rng.standard_normal((m, n)), -1.0, 1.0)
    if step:
        V = np.clip(np.round(V / step) * step, -1.0, 1.0)
    return FunctionClassSample(V)


def boolean_class(rng: np.random.Generator, m: int, n: int) -> FunctionClassSample:
    """At least two distinct ``{0,1}``-valued functions on ``n`` points."""
    A = boolean_set(rng, n, max(2, min(m, 1 << n)))
    return FunctionClassSample(A.points.astype(float))
