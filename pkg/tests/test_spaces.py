import numpy as np
import pytest
from hypothesis import given, strategies as st

from vce.errors import PreconditionError
from vce.spaces import (Alphabet, PointSet, QuasiMetric, min_pairwise_separation, product_distance,
                        separation_profile)

tables = st.integers(2, 5).flatmap(lambda k: st.lists(
    st.sampled_from([0.0, 0.25, 0.5, 1.0]), min_size=k * (k - 1) // 2, max_size=k * (k - 1) // 2
).map(lambda vals: _table(k, vals)))


def _table(k, vals):
    d = np.zeros((k, k))
    d[np.triu_indices(k, 1)] = vals
    return QuasiMetric.from_table((d + d.T).tolist())


@st.composite
def metric_and_pair(draw):
    m = draw(st.one_of(tables, st.just(QuasiMetric.zero_one()), st.just(QuasiMetric.zero_one(2))))
    size = m.alphabet_size or 4
    n = draw(st.integers(1, 8))
    sym = st.lists(st.integers(0, size - 1), min_size=n, max_size=n)
    return m, np.array(draw(sym)), np.array(draw(sym))


@given(metric_and_pair())
def test_product_distance_is_symmetric_and_bounded(case):
    m, x, y = case
    assert product_distance(x, y, m) == product_distance(y, x, m)
    assert 0 <= product_distance(x, y, m) <= 1
    assert product_distance(x, x, m) == 0


@given(metric_and_pair())
def test_separation_profile_counts_match_01_distance(case):
    m, x, y = case
    prof = separation_profile(x, y, m)
    assert prof.separated_coords <= set(range(len(x)))
    assert prof.separated_coords == separation_profile(y, x, m).separated_coords
    if m.is_01_valued:
        assert len(prof) == pytest.approx(len(x) * product_distance(x, y, m))
    else:
        assert len(prof) >= len(x) * product_distance(x, y, m) - 1e-12


def test_threshold_metric_needs_gap_q():
    m = QuasiMetric.zero_one(2)
    assert m.distance(np.array([0, 0, 3]), np.array([1, 2, 0])).tolist() == [0.0, 1.0, 1.0]


def test_table_validation():
    with pytest.raises(PreconditionError, match="symmetric"):
        QuasiMetric.from_table([[0, 1], [0.5, 0]])
    with pytest.raises(PreconditionError, match="diagonal"):
        QuasiMetric.from_table([[0.1, 1], [1, 0]])
    with pytest.warns(UserWarning, match="diameter"):
        QuasiMetric.from_table([[0, 2], [2, 0]])


def test_point_set_checks_alphabet_and_shape():
    with pytest.raises(PreconditionError, match="outside the alphabet"):
        PointSet([[0, 3]], Alphabet(3))
    with pytest.raises(PreconditionError, match=r"outside \[-1, 1\]"):
        PointSet([[0.5, 1.5]], Alphabet(None))
    with pytest.raises(PreconditionError, match="length"):
        PointSet.from_dict({"points": [[0, 1], [1]]})
    A = PointSet([[0, 1], [0, 1], [1, 0]], 2)
    assert len(A.unique()) == 2
    with pytest.raises(AttributeError):
        A.points = None


def test_round_trip_through_dict():
    A = PointSet([[0.25, -1.0], [1.0, 0.0]])
    B = PointSet.from_dict(A.to_dict())
    assert np.array_equal(A.points, B.points) and A.alphabet == B.alphabet
    for m in (QuasiMetric.zero_one(0.5), QuasiMetric.absolute(), QuasiMetric.from_table([[0, 1], [1, 0]])):
        assert QuasiMetric.from_dict(m.to_dict()) == m


def test_min_pairwise_separation_reports_first_pair():
    A = PointSet([[0, 0, 0], [1, 1, 0], [1, 1, 1]], 2)
    assert min_pairwise_separation(A, QuasiMetric.zero_one()) == (1, (1, 2))
