import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perslaw import oracle
from perslaw.filtration import FilteredComplex, build_cech, build_complex, build_rips
from perslaw.persistence import (CensoredPointsError, DiagramMeasure, PersistenceDiagram, compute_persistence,
                                 count_negative_simplexes, count_tail, persistent_betti, read_diagrams_csv,
                                 total_persistence, truncated_persistence, write_diagrams_csv)
from perslaw.pointcloud import PointCloud, sample_binomial

SQUARE = PointCloud.from_array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_square_rips_diagrams():
    H0, H1 = compute_persistence(build_rips(SQUARE, math.inf, 1), 1)
    assert np.allclose(H0.points, [[0, 1]] * 3)
    assert H1.points.shape == (1, 2)
    assert abs(H1.births[0] - 1) < 1e-9 and abs(H1.deaths[0] - math.sqrt(2)) < 1e-9


def test_square_cech_h1():
    H1 = compute_persistence(build_cech(SQUARE, math.inf, 1), 1)[1]
    assert H1.points.shape == (1, 2)
    assert abs(H1.births[0] - 0.5) < 1e-6 and abs(H1.deaths[0] - math.sqrt(2) / 2) < 1e-6


def test_pairing_records_simplices():
    H1 = compute_persistence(build_rips(SQUARE, math.inf, 1), 1)[1]
    assert H1.has_pairing
    assert H1.pos_vertices.shape == (1, 2) and H1.neg_vertices.shape == (1, 3)
    assert count_negative_simplexes([None, H1], 1, 1.0) == 1


def test_censoring_below_death():
    H0, H1 = compute_persistence(build_rips(SQUARE, 1.2, 1), 1)
    assert H1.n_censored == 1 and H1.deaths[0] == 1.2
    assert H0.n_censored == 0
    with pytest.raises(CensoredPointsError):
        total_persistence(H1, 1.0)
    assert len(H1.uncensored()) == 0
    assert persistent_betti(H1, 1.0, 1.1) == 1
    assert persistent_betti(H1, 1.0, 1.3) == 0


def test_zero_persistence_pairs_dropped():
    # the triangle closes at the value of its last edge
    tri = PointCloud.from_array([[0, 0], [1, 0], [0.5, 0.5]])
    H1 = compute_persistence(build_rips(tri, math.inf, 1), 1)[1]
    assert len(H1) == 0 and H1.n_zero_persistence == 1


def test_custom_complex_hollow_triangle():
    cx = FilteredComplex.from_simplices([((0,), 0), ((1,), 0), ((2,), 0), ((0, 1), 1), ((1, 2), 1),
                                         ((0, 2), 2), ((0, 1, 2), 3)])
    H0, H1 = compute_persistence(cx, 1)
    assert sorted(map(tuple, H0.points)) == [(0, 1), (0, 1)]
    assert list(map(tuple, H1.points)) == [(2, 3)]


def test_rejects_too_high_degree():
    with pytest.raises(ValueError):
        compute_persistence(build_rips(SQUARE, math.inf, 1), 2)


def test_diagram_validation():
    with pytest.raises(ValueError):
        PersistenceDiagram(0, [1.0], [0.5])
    with pytest.raises(ValueError):
        PersistenceDiagram(0, [1.0, 2.0], [3.0])


def test_total_and_truncated_persistence():
    D = PersistenceDiagram.from_points([(0, 1), (0, 3), (1, 1.5)])
    assert total_persistence(D, 0) == 3
    assert total_persistence(D, 2) == pytest.approx(1 + 9 + 0.25)
    assert truncated_persistence(D, 1, 1.0) == pytest.approx(4)
    with pytest.raises(ValueError):
        total_persistence(D, -1)


def test_persistent_betti_requires_order():
    D = PersistenceDiagram.from_points([(0, 1)])
    with pytest.raises(ValueError):
        persistent_betti(D, 2.0, 1.0)


def test_measure_and_tail():
    D = PersistenceDiagram.from_points([(0, 1), (0, 2), (1, 4)], 1)
    mu = DiagramMeasure.rescaled(D, n=4, d=2)
    assert mu.scale == 2.0 and mu.total_mass == pytest.approx(0.75)
    assert count_tail(mu, 4.0) == pytest.approx(0.5)
    assert count_tail(mu, 7.0) == pytest.approx(0.25)
    assert count_tail(mu, 7.0, "persistence") == 0.0
    assert mu.integrate(lambda b, d: d - b) == pytest.approx((2 + 4 + 6) / 4)


def test_csv_roundtrip(tmp_path):
    X = sample_binomial(30, d=2, seed=1)
    diags = compute_persistence(build_rips(X, 0.2, 1), 1)
    path = tmp_path / "d.csv"
    write_diagrams_csv(diags, path, pairing=True)
    back = read_diagrams_csv(path)
    for a, b in zip(diags, back):
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.censored, b.censored)
        assert np.array_equal(a.pos_vertices, b.pos_vertices)
        assert np.array_equal(a.neg_vertices, b.neg_vertices)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 10), st.sampled_from([2, 3]), st.integers(0, 2**32), st.sampled_from(["rips", "cech"]))
def test_betti_matches_rank_oracle(n, d, seed, kind):
    rng = np.random.default_rng(seed)
    cx = build_complex(PointCloud(rng.random((n, d)), d), kind, math.inf, 2)
    D = compute_persistence(cx, 2)
    vals = np.concatenate(cx.values_by_dim)
    for _ in range(4):
        r, s = sorted(rng.choice(vals, 2))
        for q in range(3):
            assert persistent_betti(D[q], r, s) == oracle.betti_via_rank(cx, q, r, s)


@settings(max_examples=25, deadline=None)
@given(st.integers(5, 40), st.integers(0, 2**32), st.sampled_from(["rips", "cech"]))
def test_clearing_and_h0_paths_agree(n, seed, kind):
    X = PointCloud(np.random.default_rng(seed).random((n, 2)), 2)
    cx = build_complex(X, kind, 0.4, 1)
    fast = compute_persistence(cx, 1)
    plain = compute_persistence(cx, 1, clearing=False, h0="reduction")
    for a, b in zip(fast, plain):
        assert np.array_equal(a.sorted_points(), b.sorted_points())
        assert a.n_censored == b.n_censored


@settings(max_examples=15, deadline=None)
@given(st.integers(10, 40), st.integers(0, 2**32))
def test_h0_deaths_are_mst_edges(n, seed):
    from scipy.sparse.csgraph import minimum_spanning_tree
    from scipy.spatial.distance import pdist, squareform

    P = np.random.default_rng(seed).random((n, 2))
    H0 = compute_persistence(build_rips(PointCloud(P, 2), math.inf, 0 + 1), 0)[0]
    mst = minimum_spanning_tree(squareform(pdist(P))).data
    assert np.allclose(np.sort(H0.deaths), np.sort(mst))


@settings(max_examples=15, deadline=None)
@given(st.integers(6, 30), st.integers(0, 2**32))
def test_invariant_under_relabelling(n, seed):
    rng = np.random.default_rng(seed)
    P = rng.random((n, 2))
    perm = rng.permutation(n)
    a = compute_persistence(build_rips(PointCloud(P, 2), math.inf, 1), 1)
    b = compute_persistence(build_rips(PointCloud(P[perm], 2), math.inf, 1), 1)
    for x, y in zip(a, b):
        assert np.allclose(x.sorted_points(), y.sorted_points(), atol=1e-12)
