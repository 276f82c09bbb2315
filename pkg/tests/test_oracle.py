import itertools
import math

import numpy as np
import pytest

from perslaw import oracle
from perslaw.filtration import FilteredComplex
from perslaw.representations import WeightSpec


def test_dense_rank_and_nullspace():
    M = oracle.DenseBooleanMatrix(np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]]))
    assert M.rank() == 2
    N = M.nullspace()
    assert N.shape == (3, 1)
    assert not np.any((M.data.astype(int) @ N.astype(int)) % 2)


def test_dense_rank_matches_brute_force(rng):
    for _ in range(30):
        A = rng.integers(0, 2, size=(rng.integers(1, 6), rng.integers(1, 6)))
        rows, cols = A.shape
        # rank = log2 of the size of the column space over GF(2)
        span = {tuple((A @ np.array(c)) % 2) for c in itertools.product((0, 1), repeat=cols)}
        assert oracle.DenseBooleanMatrix(A).rank() == int(round(math.log2(len(span))))


def test_betti_via_rank_on_hollow_triangle():
    cx = FilteredComplex.from_simplices([((0,), 0), ((1,), 0), ((2,), 0), ((0, 1), 1), ((1, 2), 1),
                                         ((0, 2), 2), ((0, 1, 2), 3)])
    assert oracle.betti_via_rank(cx, 1, 2, 2) == 1
    assert oracle.betti_via_rank(cx, 1, 2, 3) == 0
    assert oracle.betti_via_rank(cx, 0, 0, 0) == 2  # essential component dropped
    assert oracle.betti_via_rank(cx, 0, 0, 1) == 0


def test_exhaustive_wasserstein_small_cases():
    assert oracle.exhaustive_wasserstein([], [], 2.0) == 0.0
    # single point against the empty diagram goes to the diagonal
    assert oracle.exhaustive_wasserstein([(0, 2)], [], 1.0, "euclidean") == pytest.approx(math.sqrt(2))
    assert oracle.exhaustive_wasserstein([(0, 2)], [], 1.0, "sup") == pytest.approx(1.0)
    assert oracle.exhaustive_wasserstein([(0, 2)], [], 1.0, "l1") == pytest.approx(2.0)
    assert oracle.exhaustive_wasserstein([(0, 2)], [(0, 2.1)], math.inf) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        oracle.exhaustive_wasserstein([(0, 1)] * 5, [(0, 1)] * 4)


def test_gaussian_quadrature_against_erf():
    from scipy.special import erf

    s = 0.3
    cell = ((-0.2, 0.5), (0.1, 0.4))
    ref = 0.25 * (erf((0.5 - 0.1) / (s * math.sqrt(2))) - erf((-0.2 - 0.1) / (s * math.sqrt(2)))) \
        * (erf((0.4 - 0.2) / (s * math.sqrt(2))) - erf((0.1 - 0.2) / (s * math.sqrt(2))))
    assert oracle.gaussian_cell_quadrature((0.1, 0.2), s, cell) == pytest.approx(ref, abs=1e-13)


def test_enclosing_radius_known_shapes():
    tri = np.array([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
    assert oracle.brute_force_enclosing_radius(tri) == pytest.approx(1 / math.sqrt(3), abs=1e-12)
    obtuse = np.array([[0, 0], [2, 0], [1, 0.1]])
    assert oracle.brute_force_enclosing_radius(obtuse) == pytest.approx(1.0, abs=1e-12)
    assert oracle.brute_force_enclosing_radius([[3.0, 4.0]]) == 0.0


def test_brute_force_values_square():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    rips = oracle.brute_force_values(sq, "rips", max_dim=3)
    cech = oracle.brute_force_values(sq, "cech", max_dim=2)
    assert rips[(0, 2)] == pytest.approx(math.sqrt(2))
    assert cech[(0, 1)] == pytest.approx(0.5)
    assert cech[(0, 1, 2)] == pytest.approx(math.sqrt(2) / 2)
    assert rips[(0, 1, 2, 3)] == pytest.approx(math.sqrt(2))


def test_weight_derivative_check():
    u = np.geomspace(1e-3, 10, 50)
    assert oracle.finite_difference_weight_check(WeightSpec("power", 2.0), u) == pytest.approx(1.0, abs=1e-6)
    assert oracle.finite_difference_weight_check(WeightSpec("arctan", 1.5, 2.0), u) <= 1.0 + 1e-6
    with pytest.raises(ValueError):
        oracle.finite_difference_weight_check(WeightSpec("power", 1.0), [0.0, 1.0])
