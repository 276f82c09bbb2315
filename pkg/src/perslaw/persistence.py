"""Persistent homology over the two-element field.

Diagrams follow two conventions: pairs with zero persistence are dropped,
and classes that never die are not reported. In a complex truncated at
``r_max``, a class still alive at ``r_max`` is kept as a *censored* point
whose recorded death is ``r_max``; its true death is larger.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import _kernels as K
from .filtration import FilteredComplex


class CensoredPointsError(ValueError):
    """A quantity needing true death times met points censored at r_max."""


@dataclass
class PersistenceDiagram:
    """Points of one homology degree, with the simplex pair that created each.

    ``pos_vertices[i]`` and ``neg_vertices[i]`` hold the vertex lists of the
    positive q-simplex and negative (q+1)-simplex of point i; censored points
    have a row of -1 in ``neg_vertices``. Both are None for diagrams that were
    loaded without pairing information.
    """

    degree: int
    births: np.ndarray
    deaths: np.ndarray
    censored: np.ndarray = None
    r_max: float = np.inf
    pos_vertices: Optional[np.ndarray] = None
    neg_vertices: Optional[np.ndarray] = None
    n_zero_persistence: int = 0

    def __post_init__(self):
        self.births = np.asarray(self.births, dtype=float).reshape(-1)
        self.deaths = np.asarray(self.deaths, dtype=float).reshape(-1)
        if self.censored is None:
            self.censored = np.zeros(self.births.size, dtype=bool)
        self.censored = np.asarray(self.censored, dtype=bool).reshape(-1)
        if not (self.births.size == self.deaths.size == self.censored.size):
            raise ValueError("births, deaths and censored flags differ in length")
        live = ~self.censored
        if np.any(self.births[live] >= self.deaths[live]):
            raise ValueError("every uncensored point needs birth < death")

    @classmethod
    def from_points(cls, points, degree: int = 0) -> "PersistenceDiagram":
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(degree, pts[:, 0], pts[:, 1])

    def __len__(self) -> int:
        return int(self.births.size)

    @property
    def points(self) -> np.ndarray:
        return np.column_stack((self.births, self.deaths))

    @property
    def persistence(self) -> np.ndarray:
        return self.deaths - self.births

    @property
    def n_censored(self) -> int:
        return int(self.censored.sum())

    @property
    def has_pairing(self) -> bool:
        return self.pos_vertices is not None and self.neg_vertices is not None

    def scaled(self, factor: float) -> "PersistenceDiagram":
        return PersistenceDiagram(self.degree, self.births * factor, self.deaths * factor,
                                  self.censored.copy(), self.r_max * factor,
                                  self.pos_vertices, self.neg_vertices, self.n_zero_persistence)

    def uncensored(self) -> "PersistenceDiagram":
        keep = ~self.censored
        return PersistenceDiagram(
            self.degree, self.births[keep], self.deaths[keep], None, self.r_max,
            None if self.pos_vertices is None else self.pos_vertices[keep],
            None if self.neg_vertices is None else self.neg_vertices[keep],
        )

    def require_uncensored(self, what: str) -> None:
        if self.n_censored:
            raise CensoredPointsError(
                f"{what} is undefined with censored points: {self.n_censored} point(s) of degree "
                f"{self.degree} die after r_max={self.r_max:g}; rebuild with a larger r_max"
            )

    def sorted_points(self) -> np.ndarray:
        """Points in lexicographic (birth, death) order, for order-free comparisons."""
        pts = self.points
        return pts[np.lexsort((pts[:, 1], pts[:, 0]))]


def _vertex_rank_map(cx: FilteredComplex) -> np.ndarray:
    verts = cx.simplices_by_dim[0][:, 0]
    rank = np.full(cx.n_vertices, -1, dtype=np.int64)
    rank[verts] = np.arange(verts.size)
    return rank


def compute_persistence(cx: FilteredComplex, q_max: Optional[int] = None, clearing: bool = True,
                        h0: str = "union_find") -> List[PersistenceDiagram]:
    """Diagrams of degrees ``0..q_max`` of a filtered complex.

    Columns are reduced from the top dimension down. With ``clearing`` a
    column whose simplex is already known to be a pivot (positive) is skipped,
    and in dimension 2 triangles coned off by earlier triangles are skipped as
    positive. ``clearing=False`` runs the plain reduction on every column.
    Degree 0 comes from a union-find sweep (``h0="union_find"``) or from the
    edge-column reduction (``h0="reduction"``); both give the same pairs.
    """
    top = cx.max_dim
    if q_max is None:
        q_max = top - 1
    if q_max < 0 or q_max + 1 > top:
        raise ValueError(f"complex of dimension {top} cannot give degree {q_max} (needs q_max+1 simplices)")
    if h0 not in ("union_find", "reduction"):
        raise ValueError("h0 must be 'union_find' or 'reduction'")
    counts = cx.counts()
    facets = [None] + [cx.facet_ranks(k) for k in range(1, top + 1)]
    cleared = [np.zeros(m, dtype=bool) for m in counts]
    lows: List[Optional[np.ndarray]] = [None] * (top + 1)

    P = np.zeros((0, 1))
    nb = (np.zeros(1, np.int64), np.zeros(0, np.int64), np.zeros(0))
    can_certify = clearing and cx.kind in ("rips", "cech") and cx.cloud is not None and cx._neighbors is not None
    if can_certify:
        P = np.ascontiguousarray(cx.cloud.points, dtype=float)
        nb = cx._neighbors
    kind_code = K.CECH if cx.kind == "cech" else K.RIPS

    last = 1 if h0 == "reduction" else 2
    for k in range(top, last - 1, -1):
        certify = can_certify and k == 2
        verts = cx.simplices_by_dim[k] if certify else np.zeros((0, 3), np.int64)
        vals = cx.values_by_dim[k] if certify else np.zeros(0)
        edges = cx.simplices_by_dim[1] if certify else np.zeros((0, 2), np.int64)
        low, _ = K.reduce_columns(facets[k], counts[k - 1], cleared[k], certify, P, kind_code,
                                  verts, vals, edges, nb[0], nb[1], nb[2])
        lows[k] = low
        if clearing:
            cleared[k - 1][low[low >= 0]] = True

    if h0 == "union_find" and top >= 1:
        vrank = _vertex_rank_map(cx)
        E = cx.simplices_by_dim[1]
        dies = K.union_find_pairs(vrank[E[:, 0]], vrank[E[:, 1]], counts[0])
        lows[1] = dies

    diagrams = []
    for q in range(q_max + 1):
        diagrams.append(_diagram_of_degree(cx, q, lows))
    return diagrams


def _diagram_of_degree(cx: FilteredComplex, q: int, lows) -> PersistenceDiagram:
    Sq, Vq = cx.simplices_by_dim[q], cx.values_by_dim[q]
    Sn, Vn = cx.simplices_by_dim[q + 1], cx.values_by_dim[q + 1]
    low = lows[q + 1]
    cols = np.nonzero(low >= 0)[0]
    rows = low[cols]
    births = Vq[rows]
    deaths = Vn[cols]
    finite = deaths > births
    n_zero = int((~finite).sum())
    cols, rows = cols[finite], rows[finite]
    births, deaths = births[finite], deaths[finite]

    # positive q-simplices never used as a pivot are still alive at r_max
    if q == 0:
        positive = np.ones(Sq.shape[0], dtype=bool)
    else:
        positive = lows[q] < 0
    paired = np.zeros(Sq.shape[0], dtype=bool)
    paired[low[low >= 0]] = True
    alive = np.nonzero(positive & ~paired)[0]
    if q == 0 and alive.size:
        alive = alive[1:]  # the oldest component never dies
    if not np.isfinite(cx.r_max):
        alive = alive[:0]

    pos = np.concatenate((Sq[rows], Sq[alive]))
    neg = np.concatenate((Sn[cols], np.full((alive.size, q + 2), -1, dtype=np.int64)))
    return PersistenceDiagram(
        degree=q,
        births=np.concatenate((births, Vq[alive])),
        deaths=np.concatenate((deaths, np.full(alive.size, cx.r_max))),
        censored=np.concatenate((np.zeros(births.size, bool), np.ones(alive.size, bool))),
        r_max=cx.r_max,
        pos_vertices=pos,
        neg_vertices=neg,
        n_zero_persistence=n_zero,
    )


def persistent_betti(diagram: PersistenceDiagram, r: float, s: float) -> int:
    """Number of points in [0, r] x (s, inf).

    A censored point counts when its censoring radius exceeds ``s``: its true
    death is then certainly beyond ``s``. For ``s >= r_max`` censored points
    are not counted, which undercounts whenever they die later than ``s``.
    """
    if r > s:
        raise ValueError("persistent Betti numbers need r <= s")
    born = diagram.births <= r
    live = np.where(diagram.censored, diagram.r_max > s, diagram.deaths > s)
    return int(np.count_nonzero(born & live))


def total_persistence(diagram: PersistenceDiagram, alpha: float) -> float:
    """Sum of pers^alpha over the diagram."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    diagram.require_uncensored("total persistence")
    return float(np.sum(diagram.persistence ** alpha))


def truncated_persistence(diagram: PersistenceDiagram, alpha: float, M: float) -> float:
    """Sum of pers^alpha over points with pers >= M."""
    if alpha < 0 or M < 0:
        raise ValueError("alpha and M must be non-negative")
    diagram.require_uncensored("truncated total persistence")
    p = diagram.persistence
    return float(np.sum(p[p >= M] ** alpha))


@dataclass
class DiagramMeasure:
    """``mass_per_point`` times the diagram with coordinates multiplied by ``scale``.

    The usual choice is scale ``n**(1/d)`` and mass ``1/n``.
    """

    base: PersistenceDiagram
    scale: float = 1.0
    mass_per_point: float = 1.0
    scaled: PersistenceDiagram = field(init=False, repr=False)

    def __post_init__(self):
        self.scaled = self.base.scaled(self.scale)

    @classmethod
    def rescaled(cls, diagram: PersistenceDiagram, n: int, d: int) -> "DiagramMeasure":
        return cls(diagram, float(n) ** (1.0 / d), 1.0 / n)

    @property
    def total_mass(self) -> float:
        return self.mass_per_point * len(self.base)

    def integrate(self, fn) -> float:
        """Integral of ``fn(births, deaths)`` (vectorised) against the measure."""
        D = self.scaled
        D.require_uncensored("integration against the diagram measure")
        return float(self.mass_per_point * np.sum(fn(D.births, D.deaths)))


def count_tail(measure: DiagramMeasure, M: float, mode: str = "death") -> float:
    """Mass of {death >= M} (``mode="death"``) or {pers >= M} (``mode="persistence"``).

    Censored points enter with their recorded death ``r_max``, so for M above
    the (scaled) truncation radius they are missed.
    """
    if M < 0:
        raise ValueError("M must be non-negative")
    D = measure.scaled
    if mode == "death":
        sel = D.deaths >= M
    elif mode == "persistence":
        sel = D.persistence >= M
    else:
        raise ValueError("mode must be 'death' or 'persistence'")
    return float(np.count_nonzero(sel)) * measure.mass_per_point


def count_negative_simplexes(diagrams: Sequence[PersistenceDiagram], q: int, M: float) -> int:
    """Negative (q+1)-simplices with filtration value >= M that kill a degree-q point."""
    D = diagrams[q] if not isinstance(diagrams, PersistenceDiagram) else diagrams
    if D.degree != q:
        D = next((x for x in diagrams if x.degree == q), None)
        if D is None:
            raise ValueError(f"no diagram of degree {q}")
    if not D.has_pairing:
        raise ValueError("diagram carries no simplex pairing")
    killed = ~D.censored
    return int(np.count_nonzero(killed & (D.deaths >= M)))


# ---------------------------------------------------------------------------
# CSV


def _fmt_simplex(row) -> str:
    return ";".join(str(int(v)) for v in row if v >= 0)


def write_diagrams_csv(diagrams: Sequence[PersistenceDiagram], path, pairing: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["degree", "birth", "death", "censored"]
        if pairing:
            header += ["pos_simplex", "neg_simplex"]
        w.writerow(header)
        for D in diagrams:
            for i in range(len(D)):
                row = [D.degree, repr(float(D.births[i])), repr(float(D.deaths[i])), int(D.censored[i])]
                if pairing:
                    if not D.has_pairing:
                        raise ValueError("diagram carries no simplex pairing")
                    row += [_fmt_simplex(D.pos_vertices[i]), _fmt_simplex(D.neg_vertices[i])]
                w.writerow(row)


def read_diagrams_csv(path) -> List[PersistenceDiagram]:
    """Load diagrams by degree; pairing columns, if present, are restored."""
    by_degree: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"degree", "birth", "death", "censored"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns degree,birth,death,censored")
        has_pairs = {"pos_simplex", "neg_simplex"} <= set(reader.fieldnames)
        for row in reader:
            by_degree.setdefault(int(row["degree"]), []).append(row)
    out = []
    for q in sorted(by_degree):
        rows = by_degree[q]
        births = [float(r["birth"]) for r in rows]
        deaths = [float(r["death"]) for r in rows]
        cens = [bool(int(r["censored"])) for r in rows]
        r_max = max((d for d, c in zip(deaths, cens) if c), default=np.inf)
        pos = neg = None
        if has_pairs:
            pos = np.array([[int(v) for v in r["pos_simplex"].split(";")] for r in rows],
                           dtype=np.int64).reshape(-1, q + 1)
            neg = np.array([[int(v) for v in r["neg_simplex"].split(";")] if r["neg_simplex"]
                            else [-1] * (q + 2) for r in rows], dtype=np.int64).reshape(-1, q + 2)
        out.append(PersistenceDiagram(q, births, deaths, cens, r_max, pos, neg))
    return out
