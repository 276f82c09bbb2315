import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perslaw import oracle
from perslaw.filtration import (FilteredComplex, SimplexBudgetExceeded, build_cech, build_complex, build_rips,
                                min_enclosing_ball)
from perslaw.pointcloud import PointCloud

SQUARE = PointCloud.from_array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_square_rips_values():
    cx = build_rips(SQUARE, math.inf, 2)
    assert cx.counts() == [4, 6, 4, 1]
    assert np.allclose(cx.values_by_dim[1], [1, 1, 1, 1, math.sqrt(2), math.sqrt(2)])
    assert np.allclose(cx.values_by_dim[2], math.sqrt(2))
    cx.validate()


def test_square_cech_values():
    cx = build_cech(SQUARE, math.inf, 1)
    assert np.allclose(cx.values_by_dim[1][:4], 0.5)
    assert np.allclose(cx.values_by_dim[2], math.sqrt(2) / 2)


def test_equilateral_cech_triangle():
    tri = PointCloud.from_array([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
    cx = build_cech(tri, math.inf, 1)
    assert abs(cx.values_by_dim[2][0] - 1 / math.sqrt(3)) < 1e-9


def test_truncation_drops_long_simplices():
    cx = build_rips(SQUARE, 1.2, 1)
    assert cx.counts() == [4, 4, 0]
    assert cx.r_max == 1.2


def test_order_is_value_then_lex():
    # all four sides tie at 1; ties fall back to vertex order
    cx = build_rips(SQUARE, math.inf, 1)
    E = [tuple(e) for e in cx.simplices_by_dim[1][:4]]
    assert E == sorted(E)
    order = cx.simplices
    assert [s.dim for s in order[:4]] == [0, 0, 0, 0]
    vals = [(s.value, s.dim) for s in order]
    assert vals == sorted(vals)


def test_index_of_and_facets():
    cx = build_rips(SQUARE, math.inf, 1)
    i = cx.index_of((0, 1))
    assert tuple(cx.simplices_by_dim[1][i]) == (0, 1)
    with pytest.raises(KeyError):
        cx.index_of((0, 1, 2, 3))
    F = cx.facet_ranks(2)
    for row, tri in zip(F, cx.simplices_by_dim[2]):
        faces = {tuple(cx.simplices_by_dim[1][r]) for r in row}
        assert faces == {(tri[0], tri[1]), (tri[0], tri[2]), (tri[1], tri[2])}


def test_from_simplices_needs_faces():
    cx = FilteredComplex.from_simplices([((0,), 0), ((1,), 0), ((0, 1, 2), 1)])
    with pytest.raises(ValueError):
        cx.validate()
    with pytest.raises(ValueError):
        FilteredComplex.from_simplices([((0, 0), 1)])


def test_budget_guard():
    X = PointCloud(np.random.default_rng(0).random((300, 2)), 2)
    with pytest.raises(SimplexBudgetExceeded) as err:
        build_rips(X, 2.0, 2, budget=1000)
    assert err.value.budget == 1000 and err.value.estimate > 1000


def test_unknown_kind():
    with pytest.raises(ValueError):
        build_complex(SQUARE, "alpha", 1.0)


def test_stats_shape():
    st_ = build_rips(SQUARE, math.inf, 1).stats(bins=5)
    assert st_["counts"] == [4, 6, 4]
    assert len(st_["histograms"]) == 3


def test_min_enclosing_ball_degenerate():
    with pytest.raises(ValueError):
        min_enclosing_ball(np.zeros((0, 2)))
    c, r = min_enclosing_ball(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert r == pytest.approx(0.0)
    c, r = min_enclosing_ball(np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 0.0]]))
    assert r == pytest.approx(1.0) and np.allclose(c, [1.0, 0.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.sampled_from([2, 3]), st.integers(0, 2**32), st.sampled_from(["rips", "cech"]))
def test_values_match_enumeration(n, d, seed, kind):
    P = np.random.default_rng(seed).random((n, d))
    cx = build_complex(PointCloud(P, d), kind, math.inf, 2)
    cx.validate()
    ref = oracle.brute_force_values(P, kind, math.inf, 3)
    for S, V in zip(cx.simplices_by_dim, cx.values_by_dim):
        for s, v in zip(S, V):
            assert abs(ref[tuple(int(x) for x in s)] - v) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.sampled_from([2, 3, 4]), st.integers(0, 2**32))
def test_meb_matches_support_enumeration(n, d, seed):
    P = np.random.default_rng(seed).normal(size=(n, d))
    c, r = min_enclosing_ball(P)
    assert abs(r - oracle.brute_force_enclosing_radius(P)) < 1e-9
    assert np.all(np.linalg.norm(P - c, axis=1) <= r + 1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(5, 25), st.integers(0, 2**32), st.floats(0.1, 0.8))
def test_truncated_is_prefix_of_full(n, seed, r_max):
    X = PointCloud(np.random.default_rng(seed).random((n, 2)), 2)
    full = build_rips(X, math.inf, 1)
    cut = build_rips(X, r_max, 1)
    for Sf, Vf, Sc, Vc in zip(full.simplices_by_dim, full.values_by_dim, cut.simplices_by_dim, cut.values_by_dim):
        keep = Vf <= r_max
        assert np.array_equal(Sf[keep], Sc) and np.array_equal(Vf[keep], Vc)
