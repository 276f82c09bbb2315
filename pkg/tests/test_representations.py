import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perslaw import oracle
from perslaw.persistence import PersistenceDiagram
from perslaw.representations import (FeatureSpec, ImageGrid, WeightSpec, default_bandwidth,
                                     linear_representation, persistence_image, representation_distance,
                                     silhouette, weight_eval)

D = PersistenceDiagram.from_points([(0.1, 0.5), (0.2, 0.9), (0.4, 0.45)], 1)


def test_weight_families():
    assert WeightSpec("power", 2.0)(3.0) == 9.0
    assert WeightSpec("arctan", 1.0, 2.0)(0.5) == pytest.approx(math.atan(1.0))
    assert WeightSpec("arctan", 2.0, 3.0).A == 6.0
    assert weight_eval(WeightSpec("power", 1.0), (0.2, 0.7)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        WeightSpec("power", 0.5)
    assert WeightSpec("power", 0.0, strict=False)(2.0) == 1.0
    with pytest.raises(ValueError):
        WeightSpec("arctan", 1.0, 0.0)
    with pytest.raises(ValueError):
        WeightSpec("log", 1.0)


@pytest.mark.parametrize("w", [WeightSpec("power", 1.0), WeightSpec("power", 3.0),
                               WeightSpec("arctan", 1.0, 0.7), WeightSpec("arctan", 2.5, 4.0)])
def test_derivative_bound_holds(w):
    u = np.geomspace(1e-4, 1e3, 400)
    assert np.all(np.abs(w.derivative(u)) <= w.A * u ** (w.alpha - 1) * (1 + 1e-12))
    assert oracle.finite_difference_weight_check(w, u) <= 1 + 1e-6


def test_scalar_representation_is_weighted_count():
    w = WeightSpec("power", 2.0)
    v = linear_representation(D, w, FeatureSpec("constant_one"))
    assert v.kind == "scalar"
    assert float(v.values) == pytest.approx(np.sum(D.persistence ** 2))


def test_image_matches_quadrature():
    grid = ImageGrid((0.0, 0.6), (0.0, 0.8), (5, 4))
    w = WeightSpec("arctan", 1.0, 2.0)
    img = persistence_image(D, w, grid, 0.07).values
    be, pe = grid.birth_edges, grid.pers_edges
    for i in range(5):
        for j in range(4):
            ref = sum(w(p) * oracle.gaussian_cell_quadrature((b, p), 0.07, ((be[i], be[i + 1]), (pe[j], pe[j + 1])))
                      for b, p in zip(D.births, D.persistence))
            assert abs(img[i, j] - ref) < 1e-10


def test_image_mass_on_wide_grid():
    grid = ImageGrid((-2.0, 3.0), (-2.0, 3.0), (40, 40))
    w = WeightSpec("power", 1.0)
    img = persistence_image(D, w, grid, 0.05).values
    assert img.sum() == pytest.approx(np.sum(D.persistence), rel=1e-12)


def test_image_warns_when_grid_too_small():
    with pytest.warns(UserWarning):
        persistence_image(D, WeightSpec(), ImageGrid((0.0, 0.15), (0.0, 0.1), 3), 0.05)


def test_default_grid_and_bandwidth():
    assert default_bandwidth(D) == pytest.approx(0.5 * np.median(D.persistence))
    assert default_bandwidth(PersistenceDiagram(1, [], [])) == 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rep = persistence_image(D, WeightSpec(), resolution=(7, 9))
    assert rep.values.shape == (7, 9)


def test_silhouette_peak():
    single = PersistenceDiagram.from_points([(0.0, 2.0)], 1)
    s = silhouette(single, WeightSpec("power", 1.0), resolution=201, t_range=(0.0, 2.0))
    assert s.values.max() == pytest.approx(2.0 * 1.0)
    assert s.values[0] == 0.0 and s.values[-1] == 0.0
    with pytest.raises(ValueError):
        silhouette(single, WeightSpec(), resolution=1)


def test_censored_diagrams_rejected():
    C = PersistenceDiagram(1, [0.0], [1.0], [True], 1.0)
    with pytest.raises(ValueError):
        persistence_image(C, WeightSpec(), bandwidth=0.1)


def test_feature_constants():
    grid = ImageGrid((0, 1), (0, 1), 4)
    g = FeatureSpec("gaussian_bump", bandwidth=0.2, grid=grid)
    assert g.lipschitz == pytest.approx(math.exp(-0.5) * (1 + math.sqrt(5)) / 2 / 0.2)
    assert g.sup_norm == 1.0
    assert FeatureSpec("constant_one").lipschitz == 0.0
    with pytest.raises(ValueError):
        FeatureSpec("gaussian_bump", bandwidth=0.2)
    with pytest.raises(ValueError):
        FeatureSpec("tent")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_gaussian_feature_lipschitz_bound(seed):
    # moving one point by delta changes the feature by at most L * delta in sup-norm
    rng = np.random.default_rng(seed)
    grid = ImageGrid((0, 1), (0, 1), 8)
    phi = FeatureSpec("gaussian_bump", bandwidth=0.15, grid=grid)
    b, d = rng.random(), 1.0 + rng.random()
    delta = rng.normal(size=2) * 0.01
    w = WeightSpec("power", 0.0, strict=False)  # constant weight isolates the feature
    A = linear_representation(PersistenceDiagram.from_points([(b, d)]), w, phi)
    B = linear_representation(PersistenceDiagram.from_points([(b + delta[0], d + delta[1])]), w, phi)
    assert representation_distance(A, B, "sup") <= phi.lipschitz * np.linalg.norm(delta) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_representations_are_additive(seed):
    rng = np.random.default_rng(seed)
    b = rng.random(6)
    d = b + rng.random(6) + 0.01
    A = PersistenceDiagram(1, b[:3], d[:3])
    B = PersistenceDiagram(1, b[3:], d[3:])
    AB = PersistenceDiagram(1, b, d)
    grid = ImageGrid((0, 1), (0, 1), 6)
    w = WeightSpec("arctan", 1.5, 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        img = lambda X: persistence_image(X, w, grid, 0.1)
        assert np.allclose((img(A) + img(B)).values, img(AB).values, atol=1e-13)
    s = lambda X: silhouette(X, w, 50, (0.0, 2.0))
    assert np.allclose((s(A) + s(B)).values, s(AB).values, atol=1e-13)


def test_distance_norms_and_shape_check():
    a = linear_representation(D, WeightSpec(), FeatureSpec("constant_one"))
    b = linear_representation(PersistenceDiagram(1, [], []), WeightSpec(), FeatureSpec("constant_one"))
    assert representation_distance(a, b) == pytest.approx(np.sum(D.persistence))
    img = persistence_image(D, WeightSpec(), ImageGrid((0, 1), (0, 1), 3), 0.1)
    with pytest.raises(ValueError):
        representation_distance(a, img)
    with pytest.raises(ValueError):
        representation_distance(a, b, "L7")
