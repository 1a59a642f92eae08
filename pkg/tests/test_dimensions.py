import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_boolean_vc, brute_vc, sauer_shelah_sum
from vce.dimensions import (boolean_vc, embeds, sauer_shelah_bound, vc_inflated, vc_limit, vc_scaled,
                            witness_is_valid)
from vce.errors import Budget, BudgetExceeded, PreconditionError
from vce.spaces import Alphabet, PointSet, QuasiMetric


@st.composite
def finite_sets(draw, max_n=5, max_alphabet=4):
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(2, max_alphabet))
    rows = draw(st.lists(st.lists(st.integers(0, k - 1), min_size=n, max_size=n), min_size=1, max_size=14))
    return PointSet(rows, Alphabet(k))


@st.composite
def interval_sets(draw, max_n=4):
    n = draw(st.integers(1, max_n))
    vals = st.sampled_from([-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0])
    rows = draw(st.lists(st.lists(vals, min_size=n, max_size=n), min_size=1, max_size=10))
    return PointSet(rows, Alphabet(None))


@given(finite_sets(), st.sampled_from([0.25, 0.5, 1.0]))
def test_vc_scaled_matches_brute_force_on_tables(A, t):
    rng = np.random.default_rng(A.points.sum())
    k = A.alphabet.size
    d = np.zeros((k, k))
    d[np.triu_indices(k, 1)] = rng.choice([0, 0.25, 0.5, 1.0], size=k * (k - 1) // 2)
    m = QuasiMetric.from_table((d + d.T).tolist())
    res = vc_scaled(A, m, t)
    assert res.dimension == brute_vc(A.points, lambda a, b: d[a, b], t)
    if res.dimension:
        assert witness_is_valid(res, A, m, t)


@given(interval_sets(), st.sampled_from([0.25, 0.5, 0.75, 1.0]))
def test_vc_scaled_matches_brute_force_on_interval(A, t):
    res = vc_scaled(A, QuasiMetric.absolute(), t)
    assert res.dimension == brute_vc(A.points, lambda a, b: abs(a - b), t)


@given(finite_sets())
def test_vc_limit_matches_brute_force(A):
    m = QuasiMetric.zero_one()
    assert vc_limit(A, m).dimension == brute_vc(A.points, lambda a, b: float(a != b), None)


@given(finite_sets(max_n=6, max_alphabet=2))
def test_boolean_vc_agrees_with_generic_and_brute(A):
    v = boolean_vc(A).dimension
    assert v == vc_limit(A, QuasiMetric.zero_one()).dimension == brute_boolean_vc(A.points)
    assert len(A.unique()) <= sauer_shelah_bound(A.n, v)


@given(interval_sets(), st.sampled_from([0.25, 0.5]), st.sampled_from([0.5, 1.0]))
def test_vc_scaled_is_non_increasing_in_t(A, t1, t2):
    m = QuasiMetric.absolute()
    lo, hi = sorted((t1, t2))
    assert vc_scaled(A, m, lo).dimension >= vc_scaled(A, m, hi).dimension


@given(interval_sets(max_n=3), st.sampled_from([0.25, 0.5, 1.0]))
def test_inflation_by_zero_is_plain_vc(A, t):
    assert vc_inflated(A, 0.0, t).dimension == vc_scaled(A, QuasiMetric.absolute(), t).dimension


@given(interval_sets(max_n=3), st.sampled_from([0.1, 0.25]), st.sampled_from([0.5, 1.0]))
def test_inflation_can_only_raise_vc(A, r, t):
    assert vc_inflated(A, r, t).dimension >= vc_inflated(A, 0.0, t).dimension


def test_full_cube_and_tie_break():
    A = PointSet(list(itertools.product((0, 1), repeat=3)), 2)
    res = vc_limit(A, QuasiMetric.zero_one())
    assert res.dimension == 3 and res.witness.sigma == (0, 1, 2)
    assert embeds(res.witness, A)
    B = PointSet([[0, 0, 0], [1, 0, 1]], 2)
    res = boolean_vc(B)
    assert res.dimension == 1 and res.witness.sigma == (0,)


def test_sauer_shelah_bound_values():
    for n in range(0, 9):
        for v in range(0, n + 1):
            assert sauer_shelah_bound(n, v) == sauer_shelah_sum(n, v)


def test_preconditions_and_budget():
    A = PointSet([[0, 1]], 2)
    with pytest.raises(PreconditionError):
        vc_scaled(A, QuasiMetric.zero_one(), 0.0)
    big = PointSet(np.random.default_rng(0).integers(0, 2, size=(400, 20)), 2)
    with pytest.raises(BudgetExceeded):
        vc_limit(big, QuasiMetric.zero_one(), Budget(0.0))
