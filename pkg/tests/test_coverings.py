import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_cover, brute_packing, lp_distance
from vce.coverings import BallShape, covering_number, maximal_separated_subset, packing_cover_bracket
from vce.errors import PreconditionError, SizeLimitError
from vce.spaces import Alphabet, PointSet, QuasiMetric

grid = st.sampled_from([-1.0, -0.6, -0.2, 0.0, 0.3, 0.7, 1.0])
shapes = st.sampled_from([BallShape.lp(1), BallShape.lp(2), BallShape.lp(math.inf),
                          BallShape.lp(2, "n_to_1_over_p")])


@st.composite
def small_sets(draw, max_size=7):
    n = draw(st.integers(1, 3))
    rows = draw(st.lists(st.lists(grid, min_size=n, max_size=n), min_size=1, max_size=max_size))
    return PointSet(rows, Alphabet(None)).unique()


def _oracle_dist(shape):
    return lp_distance(shape.p, shape.normalization == "n_to_1_over_p")


@given(small_sets(), shapes, st.sampled_from([0.2, 0.45, 0.8]))
def test_restricted_exact_cover_matches_brute_force(A, shape, t):
    res = covering_number(A, shape, t, restricted=True)
    assert res.value == brute_cover(A.points, A.points, _oracle_dist(shape), t)
    assert res.family == "A"


@given(small_sets(), shapes, st.sampled_from([0.2, 0.45, 0.8]))
def test_unrestricted_cover_is_minimal_over_its_family(A, shape, t):
    res = covering_number(A, shape, t)
    dist = _oracle_dist(shape)
    # the returned centres really cover
    for p in A.points:
        assert min(dist(p, np.array(c)) for c in res.centers) <= t + 1e-9
    assert res.value <= covering_number(A, shape, t, restricted=True).value


@given(small_sets(), shapes, st.sampled_from([0.2, 0.45, 0.8]))
def test_duality_sandwich(A, shape, t):
    exact = covering_number(A, shape, t).value
    greedy = covering_number(A, shape, t, mode="bounds")
    packing = len(maximal_separated_subset(A, shape, 2 * t, "exact", strict=True))
    assert packing == brute_packing(A.points, _oracle_dist(shape), 2 * t, strict=True)
    assert greedy.lower <= packing <= exact <= greedy.upper


@given(small_sets(), shapes, st.sampled_from([0.2, 0.4]), st.sampled_from([0.5, 0.9]))
def test_cover_monotone_in_radius_and_subsets(A, shape, t1, t2):
    assert covering_number(A, shape, t1).value >= covering_number(A, shape, t2).value
    sub = A.subset(range(max(1, len(A) // 2)))
    assert covering_number(sub, shape, t1, restricted=True).value <= covering_number(A, shape, t1, restricted=True).value


@given(small_sets(), st.sampled_from([0.2, 0.45]))
def test_milp_and_branch_solvers_agree(A, t):
    shape = BallShape.lp(2)
    assert covering_number(A, shape, t, solver="milp").value == covering_number(A, shape, t, solver="branch").value


def test_box_grid_centres_are_optimal_for_sup_norm():
    # three collinear points at spacing 0.5 need one box of radius 0.5 centred off the set
    A = PointSet([[-0.5], [0.0], [0.5]], Alphabet(None))
    res = covering_number(A, BallShape.lp(math.inf), 0.5)
    assert res.value == 1 and res.family == "A+box-grid"
    assert covering_number(A, BallShape.lp(math.inf), 0.5, restricted=True).value == 1


def test_hamming_gauge_on_finite_alphabet():
    A = PointSet([[0, 0, 0], [1, 1, 1], [0, 1, 0]], 2)
    res = covering_number(A, BallShape.hamming(), 1 / 3)
    assert res.family == "T^n" and res.value == 2


def test_dk_gauge_counts_large_coordinates():
    shape = BallShape("dk", k=1)
    d = shape.distance(np.zeros(3), np.array([[2.0, 0.5, 0.1], [2.0, 3.0, 0.0]]))
    assert d.tolist() == [0.5, 2.0]
    assert not shape.is_metric_on(PointSet([[0.0, 0.0]]))


def test_bracket_orders_its_bounds():
    A = PointSet(np.random.default_rng(3).uniform(-1, 1, size=(12, 2)), Alphabet(None))
    br = packing_cover_bracket(A, BallShape.lp(2), 0.4)
    assert br.cover_lower <= br.cover_upper <= br.packing
    assert all(v for v in br.checks.values() if v is not None)


def test_limits_and_validation():
    with pytest.raises(PreconditionError):
        covering_number(PointSet([[0.0]]), BallShape.lp(2), 0.0)
    with pytest.raises(PreconditionError):
        BallShape.lp(0.5)
    big = PointSet(np.linspace(-1, 1, 70)[:, None], Alphabet(None))
    with pytest.raises(SizeLimitError):
        covering_number(big, BallShape.lp(2), 0.01)
    assert BallShape.from_dict({"kind": "lp", "p": "inf"}).p == math.inf
    assert BallShape.from_dict(BallShape.hamming(QuasiMetric.zero_one(1)).to_dict()).metric.q == 1
