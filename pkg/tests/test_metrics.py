import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perslaw import oracle
from perslaw.metrics import bottleneck_distance, wasserstein_distance
from perslaw.persistence import PersistenceDiagram

P_VALUES = [1.0, 2.0, 3.5, math.inf]


@st.composite
def diagrams(draw, max_size=4):
    k = draw(st.integers(0, max_size))
    b = draw(st.lists(st.floats(0, 5, allow_nan=False), min_size=k, max_size=k))
    p = draw(st.lists(st.floats(1e-3, 3, allow_nan=False), min_size=k, max_size=k))
    return PersistenceDiagram(1, b, np.asarray(b) + np.asarray(p))


def W(D1, D2, p, ground="euclidean"):
    return wasserstein_distance(D1, D2, p, ground).cost


def test_single_point_to_empty():
    D = PersistenceDiagram.from_points([(0, 2)], 1)
    E = PersistenceDiagram(1, [], [])
    assert W(D, E, 1) == pytest.approx(math.sqrt(2))
    assert W(D, E, 2, "sup") == pytest.approx(1.0)
    assert W(D, E, 1, "l1") == pytest.approx(2.0)
    assert bottleneck_distance(D, E) == pytest.approx(math.sqrt(2))
    assert W(E, E, 2) == 0.0


def test_prefers_diagonal_when_cheaper():
    A = PersistenceDiagram.from_points([(0, 0.1)], 1)
    B = PersistenceDiagram.from_points([(5, 5.1)], 1)
    res = wasserstein_distance(A, B, 2)
    assert sorted(res.pairs) == [(-1, 0), (0, -1)]
    assert res.cost == pytest.approx(math.sqrt(2) * 0.1 / math.sqrt(2))


def test_matching_recompute_equals_cost():
    A = PersistenceDiagram.from_points([(0, 1), (0.2, 2.0), (1, 1.4)], 1)
    B = PersistenceDiagram.from_points([(0.1, 1.1), (0.3, 1.8)], 1)
    for p in P_VALUES:
        res = wasserstein_distance(A, B, p)
        assert res.recompute(A, B) == pytest.approx(res.cost, abs=1e-12)


def test_rejects_bad_input():
    A = PersistenceDiagram.from_points([(0, 1)], 1)
    with pytest.raises(ValueError):
        W(A, A, 0.5)
    with pytest.raises(ValueError):
        W(A, A, 2, "manhattan")
    C = PersistenceDiagram(1, [0.0], [1.0], [True], 1.0)
    with pytest.raises(ValueError):
        W(A, C, 2)


@settings(max_examples=150, deadline=None)
@given(diagrams(), diagrams(), st.sampled_from(P_VALUES), st.sampled_from(["euclidean", "sup", "l1"]))
def test_matches_exhaustive_oracle(A, B, p, ground):
    ref = oracle.exhaustive_wasserstein(A.points, B.points, p, ground)
    assert abs(W(A, B, p, ground) - ref) <= 1e-9
    if math.isinf(p):
        assert abs(bottleneck_distance(A, B, ground) - ref) <= 1e-9


@settings(max_examples=150, deadline=None)
@given(diagrams(6), diagrams(6), diagrams(6), st.sampled_from(P_VALUES))
def test_metric_axioms(A, B, C, p):
    assert W(A, A, p) == 0.0
    assert W(A, B, p) == W(B, A, p)
    assert W(A, C, p) <= W(A, B, p) + W(B, C, p) + 1e-9


@settings(max_examples=60, deadline=None)
@given(diagrams(6), st.sampled_from(P_VALUES), st.integers(0, 2**32))
def test_point_order_does_not_matter(A, p, seed):
    perm = np.random.default_rng(seed).permutation(len(A))
    B = PersistenceDiagram(1, A.births[perm], A.deaths[perm])
    C = PersistenceDiagram.from_points([(0.5, 1.5), (2, 2.2)], 1)
    assert W(A, C, p) == W(B, C, p)


@settings(max_examples=60, deadline=None)
@given(diagrams(5), diagrams(5))
def test_wasserstein_decreases_in_p(A, B):
    vals = [W(A, B, p) for p in P_VALUES]
    assert all(x >= y - 1e-9 for x, y in zip(vals, vals[1:]))
