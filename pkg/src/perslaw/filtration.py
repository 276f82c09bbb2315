"""Truncated Vietoris-Rips and Cech filtrations on point clouds.

Conventions
-----------
* Rips: a simplex enters at its diameter, ``diam(sigma) <= r``. Several other
  libraries use ``diam <= 2r``; diagrams differ from theirs by a factor 2.
* Cech: a simplex enters at the radius of the smallest ball enclosing its
  vertices. Values are rounded to 1e-12 so that ties sort stably.
* Filtration order is ``(value, dimension, lexicographic vertex list)``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels as K
from .pointcloud import PointCloud

DEFAULT_SIMPLEX_BUDGET = 60_000_000
BUDGET_ENV = "PERSLAW_SIMPLEX_BUDGET"


class SimplexBudgetExceeded(RuntimeError):
    """Raised before construction when the estimated complex size is too large."""

    def __init__(self, estimate: float, budget: int):
        super().__init__(
            f"estimated {estimate:.3g} simplices exceeds the budget of {budget:d}; "
            f"lower r_max or raise the budget (flag --budget or ${BUDGET_ENV})"
        )
        self.estimate = estimate
        self.budget = budget


def simplex_budget(budget: Optional[int] = None) -> int:
    if budget is not None:
        return int(budget)
    env = os.environ.get(BUDGET_ENV)
    return int(float(env)) if env else DEFAULT_SIMPLEX_BUDGET


@dataclass(frozen=True)
class Simplex:
    vertices: Tuple[int, ...]
    value: float

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


def _lex_keys(S: np.ndarray, n: int) -> np.ndarray:
    keys = np.zeros(S.shape[0], dtype=np.int64)
    for t in range(S.shape[1]):
        keys = keys * n + S[:, t]
    return keys


@dataclass
class FilteredComplex:
    """Simplices grouped by dimension, each group in filtration order.

    ``simplices_by_dim[k]`` is an ``(m_k, k+1)`` array of increasing vertex
    indices and ``values_by_dim[k]`` their filtration values. Within one
    dimension rows are sorted by ``(value, lexicographic vertices)``; across
    dimensions the order is by value, then dimension.
    """

    simplices_by_dim: List[np.ndarray]
    values_by_dim: List[np.ndarray]
    n_vertices: int
    r_max: float
    kind: str
    cloud: Optional[PointCloud] = None
    _neighbors: Optional[tuple] = field(default=None, repr=False)
    _facets: dict = field(default_factory=dict, repr=False)
    _lex_cache: dict = field(default_factory=dict, repr=False)

    def _lex(self, k: int):
        """Sorted lexicographic keys of dimension k and the filtration rank of each."""
        if k not in self._lex_cache:
            keys = _lex_keys(self.simplices_by_dim[k], max(self.n_vertices, 1))
            order = np.argsort(keys, kind="stable")
            self._lex_cache[k] = (keys[order], order)
        return self._lex_cache[k]

    @property
    def max_dim(self) -> int:
        return len(self.simplices_by_dim) - 1

    def counts(self) -> List[int]:
        return [int(S.shape[0]) for S in self.simplices_by_dim]

    def __len__(self) -> int:
        return sum(self.counts())

    @property
    def simplices(self) -> List[Simplex]:
        """All simplices in filtration order (materialised; meant for small complexes)."""
        items = []
        for k, (S, V) in enumerate(zip(self.simplices_by_dim, self.values_by_dim)):
            for i in range(S.shape[0]):
                items.append((float(V[i]), k, i, Simplex(tuple(int(v) for v in S[i]), float(V[i]))))
        items.sort(key=lambda t: (t[0], t[1], t[2]))
        return [t[3] for t in items]

    def index_of(self, vertices: Sequence[int]) -> int:
        """Position of a simplex within its dimension's filtration order."""
        k = len(vertices) - 1
        key = 0
        for v in sorted(vertices):
            key = key * max(self.n_vertices, 1) + int(v)
        if k > self.max_dim:
            raise KeyError(f"simplex {tuple(vertices)} not in complex")
        keys, rank = self._lex(k)
        pos = int(np.searchsorted(keys, key))
        if pos >= keys.size or keys[pos] != key:
            raise KeyError(f"simplex {tuple(vertices)} not in complex")
        return int(rank[pos])

    def facet_ranks(self, k: int) -> np.ndarray:
        """``(m_k, k+1)`` filtration ranks of the facets of every k-simplex.

        Raises ``ValueError`` if some facet is missing (complex not face-closed).
        """
        if k in self._facets:
            return self._facets[k]
        S = self.simplices_by_dim[k]
        if k == 0 or S.shape[0] == 0:
            return np.zeros((S.shape[0], k + 1 if k else 0), dtype=np.int64)
        keys, rank = self._lex(k - 1)
        n = max(self.n_vertices, 1)
        out = np.empty((S.shape[0], k + 1), dtype=np.int64)
        for drop in range(k + 1):
            cols = [t for t in range(k + 1) if t != drop]
            fkeys = _lex_keys(S[:, cols], n)
            pos = np.searchsorted(keys, fkeys)
            pos_c = np.minimum(pos, max(keys.size - 1, 0))
            if keys.size == 0 or np.any(keys[pos_c] != fkeys):
                raise ValueError(f"complex is not closed under faces in dimension {k - 1}")
            out[:, drop] = rank[pos_c]
        self._facets[k] = out
        return out

    def validate(self) -> None:
        """Check face closure, monotone values and the sort order."""
        for k in range(self.max_dim + 1):
            V = self.values_by_dim[k]
            if V.size and np.any(np.diff(V) < 0):
                raise ValueError(f"dimension {k} is not sorted by value")
            if np.isfinite(self.r_max) and V.size and V.max() > self.r_max:
                raise ValueError("value above r_max")
            if k == 0:
                continue
            F = self.facet_ranks(k)
            face_vals = self.values_by_dim[k - 1][F]
            if np.any(face_vals.max(axis=1, initial=-np.inf) > V):
                raise ValueError(f"a face of a {k}-simplex enters after it")

    def reordered(self, perms: Sequence[np.ndarray]) -> "FilteredComplex":
        """Same simplices with another within-dimension order (must keep values sorted)."""
        S = [s[p] for s, p in zip(self.simplices_by_dim, perms)]
        V = [v[p] for v, p in zip(self.values_by_dim, perms)]
        out = FilteredComplex(S, V, self.n_vertices, self.r_max, self.kind, None)
        out.validate()
        return out

    @classmethod
    def from_simplices(cls, simplices: Iterable[Tuple[Sequence[int], float]], kind: str = "custom",
                       r_max: float = np.inf) -> "FilteredComplex":
        """Build from explicit ``(vertices, value)`` pairs, sorted by the standard order."""
        groups: dict = {}
        n = 0
        for verts, val in simplices:
            vs = tuple(sorted(int(v) for v in verts))
            if len(set(vs)) != len(vs):
                raise ValueError(f"repeated vertex in {verts}")
            groups.setdefault(len(vs) - 1, []).append((float(val), vs))
            n = max(n, max(vs) + 1)
        top = max(groups) if groups else 0
        S_list, V_list = [], []
        for k in range(top + 1):
            rows = sorted(groups.get(k, []))
            S_list.append(np.array([r[1] for r in rows], dtype=np.int64).reshape(-1, k + 1))
            V_list.append(np.array([r[0] for r in rows], dtype=float))
        return cls(S_list, V_list, n, r_max, kind)

    def stats(self, bins: int = 20) -> dict:
        out = {"kind": self.kind, "r_max": self.r_max, "n_vertices": self.n_vertices,
               "counts": self.counts(), "histograms": []}
        for k, V in enumerate(self.values_by_dim):
            if V.size:
                hist, edges = np.histogram(V, bins=bins)
                out["histograms"].append({"dim": k, "counts": hist.tolist(), "edges": edges.tolist()})
            else:
                out["histograms"].append({"dim": k, "counts": [], "edges": []})
        return out


# ---------------------------------------------------------------------------
# smallest enclosing ball


def _circumball(P: np.ndarray, support: List[int]):
    if not support:
        return None, -1.0
    base = P[support[0]]
    if len(support) == 1:
        return base.copy(), 0.0
    U = P[support[1:]] - base
    G = U @ U.T
    rhs = 0.5 * np.einsum("ij,ij->i", U, U)
    try:
        lam = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError:
        lam = np.linalg.lstsq(G, rhs, rcond=None)[0]
    offset = lam @ U
    return base + offset, float(offset @ offset)


def min_enclosing_ball(points) -> Tuple[np.ndarray, float]:
    """Smallest ball containing ``points`` (Welzl's recursion with move-to-front).

    Returns ``(center, radius)``. Support sets never exceed d+1 points, and
    their balls are circumscribed balls within the support's affine hull.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.size == 0:
        raise ValueError("min_enclosing_ball needs at least one point")
    n, d = P.shape
    scale = max(1.0, float(np.abs(P).max()))
    slack = 1e-13 * scale * scale
    order = list(range(n))

    def outside(i, center, r2):
        if center is None:
            return True
        diff = P[i] - center
        return float(diff @ diff) > r2 + slack

    def mtf(end, support):
        center, r2 = _circumball(P, support)
        if len(support) == d + 1:
            return center, r2
        i = 0
        while i < end:
            p = order[i]
            if outside(p, center, r2):
                center, r2 = mtf(i, support + [p])
                order.insert(0, order.pop(i))
            i += 1
        return center, r2

    center, r2 = mtf(n, [])
    return center, float(np.sqrt(max(r2, 0.0)))


# ---------------------------------------------------------------------------
# construction


def _neighbor_graph(P: np.ndarray, radius: float):
    """Edges ``i<j`` with exact distance ``<= radius`` in lexicographic order."""
    n = P.shape[0]
    if n < 2:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0)
    if np.isfinite(radius):
        pairs = cKDTree(P).query_pairs(radius * (1 + 1e-9) + 1e-300, output_type="ndarray")
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    else:
        iu = np.triu_indices(n, 1)
        pairs = np.column_stack(iu).astype(np.int64)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    pairs = pairs[order]
    I, J = np.ascontiguousarray(pairs[:, 0]), np.ascontiguousarray(pairs[:, 1])
    dist = K.edge_values(P, I, J, K.RIPS)
    keep = dist <= radius
    return I[keep], J[keep], dist[keep]


def _csr(n: int, I: np.ndarray, J: np.ndarray, dist: np.ndarray, edge_rank: np.ndarray):
    """Symmetric adjacency.

    Returns ``ptr``, neighbours sorted by index with the filtration rank of
    the connecting edge, and neighbours sorted by distance with the distance.
    """
    src = np.concatenate((I, J))
    dst = np.concatenate((J, I))
    dd = np.concatenate((dist, dist))
    er = np.concatenate((edge_rank, edge_rank))
    by_index = np.lexsort((dst, src))
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, src + 1, 1)
    ptr = np.cumsum(ptr)
    by_dist = np.lexsort((dst, dd, src))
    return ptr, dst[by_index], er[by_index], dst[by_dist], dd[by_dist]


def _estimate(deg: np.ndarray, n_edges: int, top: int) -> float:
    total = float(deg.size + n_edges)
    for k in range(3, top + 2):
        total += float(K.estimate_cliques(deg.astype(np.float64), k))
    return total


def _rips_triangles(I, J, Ve, order_e, ptr, idx, erank, n):
    """Rips triangles directly in filtration order, with their facet ranks."""
    T, Fc, src = K.rips_triangles(I[order_e], J[order_e], ptr, idx, erank)
    V = Ve[order_e][src]
    # equal values listed under different edges must still be in lex order
    for s0, s1 in K.tie_runs(V, src):
        sub = np.lexsort((T[s0:s1, 2], T[s0:s1, 1], T[s0:s1, 0]))
        T[s0:s1] = T[s0:s1][sub]
        Fc[s0:s1] = Fc[s0:s1][sub]
    return T, Fc, V


def _build(cloud: PointCloud, r_max: float, q_max: int, kind: str, budget: Optional[int]) -> FilteredComplex:
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    if q_max < 0:
        raise ValueError("q_max must be non-negative")
    P = np.ascontiguousarray(cloud.points, dtype=float)
    n = P.shape[0]
    top = q_max + 1
    if n > 0 and float(n) ** (top + 1) >= 2.0 ** 62:
        raise ValueError("too many vertices for the simplex key encoding")
    reach = r_max if kind == "rips" else 2.0 * r_max
    I, J, dist = _neighbor_graph(P, reach)
    Ve = dist.copy() if kind == "rips" else K.edge_values(P, I, J, K.CECH)
    order_e = np.argsort(Ve, kind="stable")
    rank_e = np.empty_like(order_e)
    rank_e[order_e] = np.arange(order_e.size)
    ptr, idx, erank, nbr_by_dist, nbr_dist = _csr(n, I, J, dist, rank_e)
    deg = np.diff(ptr)
    estimate = _estimate(deg, I.size, top)
    limit = simplex_budget(budget)
    if estimate > limit:
        raise SimplexBudgetExceeded(estimate, limit)

    S_list = [np.arange(n, dtype=np.int64).reshape(-1, 1)]
    V_list = [np.zeros(n)]
    facets = {}
    if top >= 1:
        S_list.append(np.ascontiguousarray(np.column_stack((I, J))[order_e]).astype(np.int64))
        V_list.append(Ve[order_e])
    if top >= 2 and kind == "rips":
        T, Fc, V = _rips_triangles(I, J, Ve, order_e, ptr, idx, erank, n)
        S_list.append(T)
        V_list.append(V)
        facets[2] = Fc
    lex_parent = None
    for k in range(len(S_list), top + 1):
        if lex_parent is None:
            prev = S_list[k - 1]
            lex_order = np.argsort(_lex_keys(prev, max(n, 1)), kind="stable")
            lex_parent = (np.ascontiguousarray(prev[lex_order]), V_list[k - 1][lex_order])
        parent, parent_vals = lex_parent
        counts = K.expand_count(parent, ptr, idx)
        S = K.expand_fill(parent, ptr, idx, counts)
        if kind == "rips":
            V = K.rips_values(P, S)
        elif k == 2:
            V = K.triangle_values(P, S, K.CECH)
        else:
            V = _cech_values(P, S, parent, parent_vals, n, r_max)
        keep = V <= r_max
        S, V = np.ascontiguousarray(S[keep]), V[keep]
        lex_parent = (S, V)
        order = np.argsort(V, kind="stable")
        S_list.append(np.ascontiguousarray(S[order]))
        V_list.append(V[order])
    cx = FilteredComplex(S_list, V_list, n, float(r_max), kind, cloud)
    cx._neighbors = (ptr, nbr_by_dist, nbr_dist)
    cx._facets.update(facets)
    return cx


def _cech_values(P, S, faces_lex, face_vals_lex, n, r_max) -> np.ndarray:
    """Enclosing radii of k-simplices; inf when a facet is missing from the complex."""
    out = np.empty(S.shape[0])
    for r in range(S.shape[0]):
        _, rad = min_enclosing_ball(P[S[r]])
        out[r] = np.rint(rad * 1e12) / 1e12
    out[out > r_max] = np.inf
    face_keys = _lex_keys(faces_lex, n)
    k = S.shape[1]
    for drop in range(k):
        cols = [t for t in range(k) if t != drop]
        fk = _lex_keys(S[:, cols], n)
        pos = np.minimum(np.searchsorted(face_keys, fk), max(face_keys.size - 1, 0))
        found = (face_keys.size > 0) & (face_keys[pos] == fk) if face_keys.size else np.zeros(fk.size, bool)
        out = np.where(found, np.maximum(out, face_vals_lex[pos] if face_keys.size else out), np.inf)
    return out


def build_rips(cloud: PointCloud, r_max: float, q_max: int = 1, budget: Optional[int] = None) -> FilteredComplex:
    """Vietoris-Rips filtration up to dimension ``q_max + 1``, truncated at ``r_max``."""
    return _build(cloud, r_max, q_max, "rips", budget)


def build_cech(cloud: PointCloud, r_max: float, q_max: int = 1, budget: Optional[int] = None) -> FilteredComplex:
    """Cech filtration (enclosing-ball radii) up to dimension ``q_max + 1``."""
    return _build(cloud, r_max, q_max, "cech", budget)


def build_complex(cloud: PointCloud, kind: str, r_max: float, q_max: int = 1,
                  budget: Optional[int] = None) -> FilteredComplex:
    if kind == "rips":
        return build_rips(cloud, r_max, q_max, budget)
    if kind == "cech":
        return build_cech(cloud, r_max, q_max, budget)
    raise ValueError(f"unknown filtration kind {kind!r}")
