import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import fat_oracle
from vce.empirical import (FunctionClassSample, empirical_entropy, fat_shattering, is_shattered,
                           vc_fat_chain, witness_is_valid)
from vce.errors import PreconditionError

levels = st.sampled_from([round(v, 2) for v in np.arange(-1, 1.0001, 0.25)])


@st.composite
def classes(draw, max_m=10, max_n=4):
    n = draw(st.integers(1, max_n))
    rows = draw(st.lists(st.lists(levels, min_size=n, max_size=n), min_size=1, max_size=max_m))
    return FunctionClassSample(np.array(rows))


@given(classes(), st.sampled_from([0.1, 0.125, 0.25, 0.375, 0.5]))
def test_fat_matches_grid_oracle(F, eps):
    dim, w = fat_shattering(F, eps)
    assert dim == fat_oracle(F.values, eps)
    if dim:
        assert witness_is_valid(F, w) and len(w.subset) == dim


@given(classes(), st.sampled_from([0.1, 0.25]), st.sampled_from([0.375, 0.5]))
def test_fat_non_increasing_in_eps(F, e1, e2):
    assert fat_shattering(F, e1)[0] >= fat_shattering(F, e2)[0]


@given(classes(), st.sampled_from([0.125, 0.25]))
def test_fat_monotone_in_the_class(F, eps):
    sub = FunctionClassSample(F.values[: max(1, F.m // 2)])
    assert fat_shattering(sub, eps)[0] <= fat_shattering(F, eps)[0]


@given(classes(max_n=3), st.sampled_from([0.25, 0.5, 0.75]))
def test_vc_fat_chain_holds(F, t):
    res = vc_fat_chain(F, t)
    assert res["holds"]


def test_witness_margins_are_non_strict():
    F = FunctionClassSample([[0.5], [-0.5]])
    dim, w = fat_shattering(F, 0.5)
    assert dim == 1 and witness_is_valid(F, w)
    assert fat_shattering(F, 0.5 + 1e-6)[0] == 0
    assert is_shattered(F, (0,), 0.5) is not None


def test_witness_check_rejects_tampering():
    F = FunctionClassSample([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    dim, w = fat_shattering(F, 0.9)
    assert dim == 2
    bad = type(w)(w.subset, w.gamma, tuple(reversed(w.assignment)), w.eps)
    assert not witness_is_valid(F, bad)


def test_entropy_is_a_restricted_l2_cover():
    F = FunctionClassSample([[0.0, 0.0], [0.1, 0.1], [1.0, 1.0]])
    res = empirical_entropy(F, 0.2)
    assert res.value == 2 and res.restricted_centers


def test_input_validation():
    with pytest.raises(PreconditionError, match="outside"):
        FunctionClassSample([[1.5]])
    with pytest.raises(PreconditionError, match="non-numeric"):
        FunctionClassSample.from_csv("0.1,abc\n")
    with pytest.raises(PreconditionError):
        fat_shattering(FunctionClassSample([[0.0]]), 0.0)
