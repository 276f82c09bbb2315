"""Weighted linear representations of persistence diagrams.

A representation sums ``w(r) * phi(r)`` over the diagram points ``r``. The
weight depends on the persistence only, ``w(r) = w~(death - birth)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erf

from .persistence import PersistenceDiagram

# operator norm of (b, d) -> (b, d - b)
_BIRTH_PERS_NORM = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class WeightSpec:
    """``w~(u) = u**alpha`` (power) or ``arctan(B * u**alpha)`` (arctan).

    Both satisfy ``w~(0) = 0`` and ``|w~'(u)| <= A u**(alpha-1)`` with
    ``A = alpha`` and ``A = B * alpha`` respectively, as long as alpha >= 1.
    ``strict=False`` admits smaller exponents for exploratory sweeps (alpha=0
    is the constant weight); such weights carry no derivative certificate.
    """

    family: str = "power"
    alpha: float = 1.0
    B: float = 1.0
    strict: bool = True

    def __post_init__(self):
        if self.family not in ("power", "arctan"):
            raise ValueError(f"unknown weight family {self.family!r}")
        if self.alpha < 0 or (self.strict and self.alpha < 1):
            raise ValueError(f"alpha={self.alpha} is outside the admissible range alpha >= 1")
        if self.family == "arctan" and not self.B > 0:
            raise ValueError("arctan weights need B > 0")

    @property
    def A(self) -> float:
        return self.alpha if self.family == "power" else self.B * self.alpha

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        base = np.power(u, self.alpha)
        return base if self.family == "power" else np.arctan(self.B * base)

    def derivative(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.family == "power":
            return self.alpha * np.power(u, self.alpha - 1.0)
        return self.B * self.alpha * np.power(u, self.alpha - 1.0) / (1.0 + (self.B * np.power(u, self.alpha)) ** 2)

    def to_dict(self) -> dict:
        return {"family": self.family, "alpha": self.alpha, "B": self.B, "A": self.A}


def weight_eval(w: WeightSpec, point) -> float:
    """Weight of one diagram point ``(birth, death)``."""
    b, d = point
    return float(w(max(d - b, 0.0)))


@dataclass(frozen=True)
class ImageGrid:
    """Cells on (birth, persistence) axes; ``resolution`` cells per axis."""

    birth_range: Tuple[float, float]
    pers_range: Tuple[float, float]
    resolution: Tuple[int, int] = (20, 20)

    def __post_init__(self):
        res = self.resolution
        if isinstance(res, (int, np.integer)):
            res = (int(res), int(res))
        object.__setattr__(self, "resolution", (int(res[0]), int(res[1])))
        if min(self.resolution) < 1:
            raise ValueError("grid resolution must be positive")
        for lo, hi in (self.birth_range, self.pers_range):
            if not hi > lo:
                raise ValueError("grid ranges must have positive length")

    @property
    def birth_edges(self) -> np.ndarray:
        return np.linspace(*self.birth_range, self.resolution[0] + 1)

    @property
    def pers_edges(self) -> np.ndarray:
        return np.linspace(*self.pers_range, self.resolution[1] + 1)

    @property
    def cell_area(self) -> float:
        b0, b1 = self.birth_range
        p0, p1 = self.pers_range
        return (b1 - b0) * (p1 - p0) / (self.resolution[0] * self.resolution[1])

    def centers(self) -> Tuple[np.ndarray, np.ndarray]:
        be, pe = self.birth_edges, self.pers_edges
        return 0.5 * (be[:-1] + be[1:]), 0.5 * (pe[:-1] + pe[1:])

    def to_dict(self) -> dict:
        return {"birth_range": list(self.birth_range), "pers_range": list(self.pers_range),
                "resolution": list(self.resolution)}

    @classmethod
    def covering(cls, diagrams: Sequence[PersistenceDiagram], bandwidth: float,
                 resolution=(20, 20), pad: float = 3.0) -> "ImageGrid":
        """Bounding box of all points in (birth, persistence), padded by ``pad`` bandwidths."""
        b = np.concatenate([D.births for D in diagrams] + [np.zeros(0)])
        p = np.concatenate([D.persistence for D in diagrams] + [np.zeros(0)])
        if b.size == 0:
            b = p = np.zeros(1)
        margin = pad * bandwidth
        return cls((float(b.min() - margin), float(b.max() + margin)),
                   (max(0.0, float(p.min() - margin)), float(p.max() + margin)), resolution)


@dataclass(frozen=True)
class FeatureSpec:
    """Feature map ``phi`` with certified Lipschitz constant and sup-norm.

    * ``constant_one``: scalar 1.
    * ``gaussian_bump``: unnormalised Gaussian ``exp(-|T r - c|^2 / 2 s^2)`` at
      each cell centre c of ``grid``, with ``T r = (birth, persistence)``. In
      the sup-norm over cells its sup is 1 and its Lipschitz constant is
      ``e^{-1/2} |T| / s``.
    * ``tent``: ``t -> max(0, min(t - birth, death - t))`` sampled on
      ``resolution`` points of ``t_range``. 1-Lipschitz in the sup-norm; its
      sup-norm is half the largest persistence, bounded by ``pers_bound / 2``.
    """

    kind: str = "constant_one"
    bandwidth: float = 1.0
    grid: Optional[ImageGrid] = None
    t_range: Optional[Tuple[float, float]] = None
    resolution: int = 100
    pers_bound: float = math.inf

    def __post_init__(self):
        if self.kind not in ("constant_one", "gaussian_bump", "tent"):
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.kind == "gaussian_bump":
            if not self.bandwidth > 0:
                raise ValueError("bandwidth must be positive")
            if self.grid is None:
                raise ValueError("gaussian_bump features need a grid")
        if self.kind == "tent":
            if self.t_range is None or self.resolution < 2:
                raise ValueError("tent features need a t_range and resolution >= 2")

    @property
    def lipschitz(self) -> float:
        if self.kind == "constant_one":
            return 0.0
        if self.kind == "gaussian_bump":
            return math.exp(-0.5) * _BIRTH_PERS_NORM / self.bandwidth
        return 1.0

    @property
    def sup_norm(self) -> float:
        if self.kind == "tent":
            return self.pers_bound / 2.0
        return 1.0


@dataclass
class RepresentationValue:
    """Scalar, image (matrix on a grid) or sampled function.

    ``cell`` is the quadrature weight used by the L2 norm: cell area for
    images, grid spacing for functions, 1 for scalars.
    """

    kind: str
    values: np.ndarray
    cell: float = 1.0
    meta: dict = field(default_factory=dict)

    def __add__(self, other: "RepresentationValue") -> "RepresentationValue":
        _same_shape(self, other)
        return RepresentationValue(self.kind, self.values + other.values, self.cell, dict(self.meta))


def _same_shape(a: RepresentationValue, b: RepresentationValue) -> None:
    if a.kind != b.kind or np.shape(a.values) != np.shape(b.values):
        raise ValueError(f"cannot compare {a.kind}{np.shape(a.values)} with {b.kind}{np.shape(b.values)}")


def _canonical(D: PersistenceDiagram) -> Tuple[np.ndarray, np.ndarray]:
    """Points sorted by (birth, death) so sums do not depend on input order."""
    order = np.lexsort((D.deaths, D.births))
    return D.births[order], D.deaths[order]


def _gaussian_at_centers(b, p, grid: ImageGrid, s: float):
    cb, cp = grid.centers()
    gb = np.exp(-((b[:, None] - cb[None, :]) ** 2) / (2 * s * s))
    gp = np.exp(-((p[:, None] - cp[None, :]) ** 2) / (2 * s * s))
    return gb, gp


def _tents(b, d, t):
    return np.maximum(0.0, np.minimum(t[None, :] - b[:, None], d[:, None] - t[None, :]))


def linear_representation(D: PersistenceDiagram, w: WeightSpec, phi: FeatureSpec) -> RepresentationValue:
    """Sum of ``w(r) phi(r)`` over the diagram."""
    D.require_uncensored("a linear representation")
    b, d = _canonical(D)
    wt = w(d - b)
    if phi.kind == "constant_one":
        return RepresentationValue("scalar", np.array(float(np.sum(wt))))
    if phi.kind == "gaussian_bump":
        gb, gp = _gaussian_at_centers(b, d - b, phi.grid, phi.bandwidth)
        img = (gb * wt[:, None]).T @ gp
        return RepresentationValue("image", img, phi.grid.cell_area, {"grid": phi.grid.to_dict()})
    t = np.linspace(*phi.t_range, phi.resolution)
    vals = wt @ _tents(b, d, t)
    return RepresentationValue("function", vals, float(t[1] - t[0]), {"t": t})


def default_bandwidth(D: PersistenceDiagram) -> float:
    """Half the median persistence (1 for an empty diagram)."""
    p = D.persistence
    med = float(np.median(p)) if p.size else 0.0
    return 0.5 * med if med > 0 else 1.0


def persistence_image(D: PersistenceDiagram, w: WeightSpec, grid: Optional[ImageGrid] = None,
                      bandwidth: Optional[float] = None, resolution=(20, 20)) -> RepresentationValue:
    """Weighted Gaussians integrated exactly over the cells of a (birth, persistence) grid."""
    if bandwidth is None:
        bandwidth = default_bandwidth(D)
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    D.require_uncensored("a persistence image")
    if grid is None:
        grid = ImageGrid.covering([D], bandwidth, resolution)
    b, d = _canonical(D)
    p = d - b
    if b.size and (b.min() < grid.birth_range[0] or b.max() > grid.birth_range[1]
                   or p.min() < grid.pers_range[0] or p.max() > grid.pers_range[1]):
        warnings.warn("persistence image grid does not cover every point; mass outside is clipped",
                      stacklevel=2)
    wt = w(p)
    scale = bandwidth * math.sqrt(2.0)
    cb = erf((grid.birth_edges[None, :] - b[:, None]) / scale)
    cp = erf((grid.pers_edges[None, :] - p[:, None]) / scale)
    mb = 0.5 * np.diff(cb, axis=1)
    mp = 0.5 * np.diff(cp, axis=1)
    img = (mb * wt[:, None]).T @ mp
    meta = {"grid": grid.to_dict(), "bandwidth": bandwidth, "weight": w.to_dict()}
    return RepresentationValue("image", img, grid.cell_area, meta)


def silhouette(D: PersistenceDiagram, w: WeightSpec, resolution: int = 100,
               t_range: Optional[Tuple[float, float]] = None) -> RepresentationValue:
    """Weighted sum of tents of height pers/2 centred at (birth+death)/2.

    This is the summed (linear) variant, not the normalised average.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if t_range is None:
        if len(D):
            t_range = (float(D.births.min()), float(D.deaths.max()))
        else:
            t_range = (0.0, 1.0)
        if t_range[1] <= t_range[0]:
            t_range = (t_range[0], t_range[0] + 1.0)
    phi = FeatureSpec("tent", t_range=t_range, resolution=resolution)
    return linear_representation(D, w, phi)


def representation_distance(a: RepresentationValue, b: RepresentationValue, norm: str = "L2") -> float:
    """Grid-weighted L2 norm or sup-norm of ``a - b``."""
    _same_shape(a, b)
    diff = np.asarray(a.values, dtype=float) - np.asarray(b.values, dtype=float)
    if norm == "sup":
        return float(np.max(np.abs(diff))) if diff.size else 0.0
    if norm == "L2":
        if a.kind == "scalar":
            return float(abs(diff))
        return float(math.sqrt(np.sum(diff * diff) * a.cell))
    raise ValueError("norm must be 'L2' or 'sup'")
