"""Point process samplers on the unit cube and on an embedded torus.

All samplers are pure functions of their arguments and an integer seed. The
generator is numpy's counter-based Philox, so replicate streams can be split
by deriving independent keys from ``(base_seed, k)`` with :func:`derive_seed`.
"""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np


def derive_seed(base_seed: int, *keys) -> int:
    """Stable 64-bit seed for replicate ``keys`` of a run seeded with ``base_seed``."""
    text = ":".join(str(k) for k in (base_seed,) + keys)
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class PointCloud:
    """A finite set of points in R^dim, stored as an ``(n, dim)`` float array."""

    points: np.ndarray
    dim: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1 and pts.size == 0:
            pts = pts.reshape(0, self.dim)
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ValueError(f"expected points of shape (n, {self.dim}), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @classmethod
    def from_array(cls, points) -> "PointCloud":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(pts, pts.shape[1])


def _uniform_evaluator(x: np.ndarray) -> np.ndarray:
    return np.ones(x.shape[0])


@dataclass(frozen=True)
class DensitySpec:
    """A probability density on [0,1]^d with certified bounds.

    ``evaluator`` maps an ``(m, d)`` array to ``m`` density values. The bounds
    are spot-checked on a grid and the total mass is checked by quadrature when
    :meth:`validate` runs (samplers call it once per dimension).
    """

    kind: str = "uniform"
    lower_bound: float = 1.0
    upper_bound: float = 1.0
    evaluator: Callable[[np.ndarray], np.ndarray] = field(default=_uniform_evaluator, compare=False)
    name: str = "uniform"

    def __post_init__(self):
        if self.kind not in ("uniform", "custom"):
            raise ValueError(f"unknown density kind {self.kind!r}")
        if not self.lower_bound > 0:
            raise ValueError("density lower bound must be positive (0 < inf kappa)")
        if self.upper_bound < self.lower_bound:
            raise ValueError("upper bound below lower bound")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluator(np.atleast_2d(x)), dtype=float)

    def validate(self, d: int, resolution: Optional[int] = None) -> None:
        if self.kind == "uniform":
            return
        # midpoint rule: exact for affine densities, O(h^2) otherwise
        res = resolution or {1: 4000, 2: 200, 3: 40}.get(d, 12)
        axis = (np.arange(res) + 0.5) / res
        grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
        vals = self(grid)
        tol = 1e-9 * max(1.0, self.upper_bound)
        if vals.min() < self.lower_bound - tol or vals.max() > self.upper_bound + tol:
            raise ValueError(
                f"density {self.name!r} leaves its bounds on the check grid: "
                f"[{vals.min():.6g}, {vals.max():.6g}] vs [{self.lower_bound}, {self.upper_bound}]"
            )
        mass = vals.mean()
        if abs(mass - 1.0) > 1e-3:
            raise ValueError(f"density {self.name!r} integrates to {mass:.6f}, not 1")


UNIFORM = DensitySpec()


def linear_ramp_density() -> DensitySpec:
    """kappa(x) = 0.5 + x_1 on [0,1]^d."""
    return DensitySpec(
        kind="custom",
        lower_bound=0.5,
        upper_bound=1.5,
        evaluator=lambda x: 0.5 + x[:, 0],
        name="ramp",
    )


def two_cell_density(split: float = 0.5, low: float = 0.5) -> DensitySpec:
    """Piecewise constant: ``low`` on x_1 < split and the balancing value above."""
    high = (1.0 - low * split) / (1.0 - split)
    return DensitySpec(
        kind="custom",
        lower_bound=min(low, high),
        upper_bound=max(low, high),
        evaluator=lambda x: np.where(x[:, 0] < split, low, high),
        name=f"two_cell({split},{low})",
    )


DENSITY_PRESETS = {
    "uniform": lambda: UNIFORM,
    "ramp": linear_ramp_density,
    "two_cell": two_cell_density,
}


def density_from_name(name: str) -> DensitySpec:
    try:
        return DENSITY_PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown density preset {name!r}; choose from {sorted(DENSITY_PRESETS)}") from None


def _rejection_sample(rng: np.random.Generator, n: int, density: DensitySpec, d: int) -> np.ndarray:
    if density.kind == "uniform":
        return rng.random((n, d))
    out = np.empty((n, d))
    filled = 0
    accept_rate = density.lower_bound / density.upper_bound
    while filled < n:
        batch = int((n - filled) / accept_rate * 1.1) + 16
        cand = rng.random((batch, d))
        u = rng.random(batch) * density.upper_bound
        keep = cand[u < density(cand)]
        take = min(len(keep), n - filled)
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


def sample_binomial(n: int, density: DensitySpec = UNIFORM, d: int = 2, seed: int = 0) -> PointCloud:
    """n i.i.d. points from ``density`` on [0,1]^d (rejection against its upper bound)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    density.validate(d)
    rng = make_rng(seed)
    return PointCloud(_rejection_sample(rng, n, density, d), d)


def sample_poisson(n: float, density: DensitySpec = UNIFORM, d: int = 2, seed: int = 0) -> PointCloud:
    """Poisson process of intensity ``n * density`` on [0,1]^d."""
    if n < 0:
        raise ValueError("intensity scale must be non-negative")
    density.validate(d)
    rng = make_rng(seed)
    count = int(rng.poisson(n)) if n > 0 else 0
    return PointCloud(_rejection_sample(rng, count, density, d), d)


def sample_torus(n: int, R_major: float = 1.8, r_minor: float = 1.0, seed: int = 0) -> PointCloud:
    """n points uniform w.r.t. surface area on the torus (sqrt(x^2+y^2) - R)^2 + z^2 = r^2.

    The minor angle is drawn by rejection with acceptance probability
    proportional to 1 + (r/R) cos(theta), the area element of the surface.
    """
    if not (0 < r_minor < R_major):
        raise ValueError("torus needs 0 < r_minor < R_major")
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = make_rng(seed)
    ratio = r_minor / R_major
    theta = np.empty(n)
    filled = 0
    while filled < n:
        batch = 2 * (n - filled) + 16
        t = rng.uniform(0.0, 2.0 * math.pi, batch)
        u = rng.uniform(0.0, 1.0 + ratio, batch)
        keep = t[u < 1.0 + ratio * np.cos(t)]
        take = min(len(keep), n - filled)
        theta[filled:filled + take] = keep[:take]
        filled += take
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    ring = R_major + r_minor * np.cos(theta)
    pts = np.column_stack((ring * np.cos(phi), ring * np.sin(phi), r_minor * np.sin(theta)))
    return PointCloud(pts, 3)


def torus_residual(cloud: PointCloud, R_major: float, r_minor: float) -> np.ndarray:
    """Signed violation of the torus surface equation for every point."""
    x, y, z = cloud.points.T
    return (np.hypot(x, y) - R_major) ** 2 + z ** 2 - r_minor ** 2


def rescale(cloud: PointCloud, factor: float) -> PointCloud:
    if not factor > 0:
        raise ValueError("rescale factor must be positive")
    if factor == 1:
        return cloud
    return PointCloud(cloud.points * factor, cloud.dim)


def hausdorff_distance(X: PointCloud, Y: PointCloud) -> float:
    """Symmetric Hausdorff distance between two finite clouds (Euclidean)."""
    if len(X) == 0 or len(Y) == 0:
        raise ValueError("Hausdorff distance needs two non-empty clouds")
    if X.dim != Y.dim:
        raise ValueError("clouds live in different dimensions")
    return math.sqrt(max(_directed_sq(X.points, Y.points), _directed_sq(Y.points, X.points)))


def _directed_sq(A: np.ndarray, B: np.ndarray, chunk: int = 2048) -> float:
    worst = 0.0
    for start in range(0, len(A), chunk):
        block = A[start:start + chunk]
        sq = ((block[:, None, :] - B[None, :, :]) ** 2).sum(axis=-1)
        worst = max(worst, float(sq.min(axis=1).max()))
    return worst


def write_cloud_csv(cloud: PointCloud, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(cloud.dim)])
        for row in cloud.points:
            writer.writerow([repr(float(v)) for v in row])


def read_cloud_csv(path) -> PointCloud:
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or not all(h.strip().startswith("x") for h in header):
            raise ValueError(f"{path}: expected a header row x1..xd")
        rows = [[float(v) for v in row] for row in reader if row]
    d = len(header)
    return PointCloud(np.array(rows, dtype=float).reshape(-1, d), d)
