import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perslaw.pointcloud import (DensitySpec, PointCloud, derive_seed, density_from_name, hausdorff_distance,
                                read_cloud_csv, rescale, sample_binomial, sample_poisson, sample_torus,
                                torus_residual, two_cell_density, write_cloud_csv)


def test_pointcloud_validation():
    with pytest.raises(ValueError):
        PointCloud(np.zeros((3, 2)), 3)
    with pytest.raises(ValueError):
        PointCloud(np.array([[0.0, np.nan]]), 2)
    c = PointCloud.from_array([[1.0, 2.0], [3.0, 4.0]])
    assert len(c) == 2 and c.dim == 2
    with pytest.raises(ValueError):
        c.points[0, 0] = 5.0


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(7, "a", 1) == derive_seed(7, "a", 1)
    assert len({derive_seed(7, "a", k) for k in range(100)}) == 100
    assert derive_seed(7, "a", 1) != derive_seed(8, "a", 1)


def test_binomial_is_reproducible_and_in_cube():
    a = sample_binomial(200, d=3, seed=4)
    b = sample_binomial(200, d=3, seed=4)
    assert np.array_equal(a.points, b.points)
    assert a.points.shape == (200, 3)
    assert a.points.min() >= 0 and a.points.max() <= 1
    assert not np.array_equal(a.points, sample_binomial(200, d=3, seed=5).points)


def test_poisson_count_distribution():
    counts = [len(sample_poisson(50.0, d=2, seed=s)) for s in range(400)]
    assert abs(np.mean(counts) - 50) < 4 * math.sqrt(50 / 400)
    assert abs(np.var(counts) - 50) < 15


def test_ramp_density_shifts_mass():
    X = sample_binomial(20000, density_from_name("ramp"), 2, seed=1).points
    # E[x_1] under 0.5 + x_1 is 0.5*0.5 + 1/3 = 7/12
    assert np.mean(X[:, 0]) == pytest.approx(7 / 12, abs=0.01)
    assert np.mean(X[:, 1]) == pytest.approx(0.5, abs=0.01)


def test_two_cell_density_mass():
    dens = two_cell_density(0.5, 0.5)
    dens.validate(2)
    X = sample_binomial(20000, dens, 2, seed=2).points
    assert np.mean(X[:, 0] < 0.5) == pytest.approx(0.25, abs=0.015)


def test_density_rejects_bad_bounds():
    with pytest.raises(ValueError):
        DensitySpec("custom", 0.0, 1.0)
    bad = DensitySpec("custom", 0.5, 1.5, evaluator=lambda x: 2.0 + 0 * x[:, 0], name="bad")
    with pytest.raises(ValueError):
        bad.validate(2)
    with pytest.raises(ValueError):
        density_from_name("nope")


def test_torus_points_on_surface():
    X = sample_torus(500, 1.8, 1.0, seed=3)
    assert np.max(np.abs(torus_residual(X, 1.8, 1.0))) < 1e-12
    with pytest.raises(ValueError):
        sample_torus(10, 1.0, 2.0)


def test_torus_area_weighting():
    # outer half (cos theta > 0) carries (pi R + 2r) / (2 pi R) of the area
    X = sample_torus(40000, 1.8, 1.0, seed=5).points
    outer = np.mean(np.hypot(X[:, 0], X[:, 1]) > 1.8)
    assert outer == pytest.approx((math.pi * 1.8 + 2.0) / (2 * math.pi * 1.8), abs=0.01)


def test_rescale_and_hausdorff():
    X = PointCloud.from_array([[0.0, 0.0], [1.0, 0.0]])
    Y = PointCloud.from_array([[0.0, 0.0], [1.0, 0.5], [3.0, 0.0]])
    assert hausdorff_distance(X, Y) == pytest.approx(2.0)
    assert np.allclose(rescale(X, 2.0).points, [[0, 0], [2, 0]])
    assert rescale(X, 1.0) is X
    with pytest.raises(ValueError):
        rescale(X, 0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 30), st.integers(1, 4), st.integers(0, 2**32))
def test_csv_roundtrip_is_exact(tmp_path_factory, n, d, seed):
    cloud = sample_binomial(n, d=d, seed=seed)
    path = tmp_path_factory.mktemp("cloud") / "c.csv"
    write_cloud_csv(cloud, path)
    back = read_cloud_csv(path)
    assert back.dim == d and np.array_equal(back.points, cloud.points)
