"""Slow, independent reference implementations used to cross-check the library.

Nothing here is used by the main computation path. The routines favour
transparency: dense elimination over the two-element field, enumeration of
all matchings, tensor Gauss-Legendre quadrature, combinatorial enclosing
balls.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .filtration import FilteredComplex


@dataclass
class DenseBooleanMatrix:
    """Matrix over the two-element field stored as a dense uint8 array."""

    data: np.ndarray

    def __post_init__(self):
        self.data = (np.asarray(self.data, dtype=np.uint8) & 1).reshape(self.data.shape)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def rank(self) -> int:
        return _row_echelon(self.data.copy())[1]

    def nullspace(self) -> np.ndarray:
        """Basis of the kernel as the columns of a (cols, k) matrix."""
        R, rank, pivots = _row_echelon(self.data.copy())
        free = [c for c in range(self.cols) if c not in set(pivots)]
        basis = np.zeros((self.cols, len(free)), dtype=np.uint8)
        for k, f in enumerate(free):
            basis[f, k] = 1
            for i, pc in enumerate(pivots):
                basis[pc, k] = R[i, f]
        return basis


def _row_echelon(M: np.ndarray):
    """Reduced row echelon form by Gauss-Jordan elimination mod 2."""
    rows, cols = M.shape
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hit = np.nonzero(M[r:, c])[0]
        if hit.size == 0:
            continue
        p = r + hit[0]
        if p != r:
            M[[r, p]] = M[[p, r]]
        others = np.nonzero(M[:, c])[0]
        others = others[others != r]
        M[others] ^= M[r]
        pivots.append(c)
        r += 1
    return M, r, pivots


def boundary_matrix(cx: FilteredComplex, q: int, max_value_rows: float, max_value_cols: float) -> DenseBooleanMatrix:
    """Boundary of q-simplices (value <= max_value_cols) into (q-1)-simplices (value <= max_value_rows)."""
    cols = [tuple(s) for s, v in zip(cx.simplices_by_dim[q], cx.values_by_dim[q]) if v <= max_value_cols]
    if q == 0:
        return DenseBooleanMatrix(np.zeros((0, len(cols)), dtype=np.uint8))
    rows = [tuple(s) for s, v in zip(cx.simplices_by_dim[q - 1], cx.values_by_dim[q - 1]) if v <= max_value_rows]
    where = {s: i for i, s in enumerate(rows)}
    M = np.zeros((len(rows), len(cols)), dtype=np.uint8)
    for j, s in enumerate(cols):
        for drop in range(len(s)):
            face = s[:drop] + s[drop + 1:]
            M[where[face], j] = 1
    return DenseBooleanMatrix(M)


def betti_via_rank(cx: FilteredComplex, q: int, r: float, s: float, drop_essential_h0: bool = True) -> int:
    """Rank of H_q(K^r) -> H_q(K^s), i.e. dim Z - dim(Z cap B).

    Z is the cycle space of K^r in degree q and B the boundary space of K^s.
    With ``drop_essential_h0`` the one component that never dies is not
    counted, matching diagrams without essential classes.
    """
    if r > s:
        raise ValueError("need r <= s")
    if q + 1 > cx.max_dim:
        raise ValueError(f"complex must contain dimension {q + 1}")
    chains_s = [tuple(x) for x, v in zip(cx.simplices_by_dim[q], cx.values_by_dim[q]) if v <= s]
    index_s = {x: i for i, x in enumerate(chains_s)}
    in_r = [tuple(x) for x, v in zip(cx.simplices_by_dim[q], cx.values_by_dim[q]) if v <= r]
    # cycles of K^r, expressed in the chain basis of K^s
    Z_r = boundary_matrix(cx, q, r, r).nullspace() if q > 0 else np.eye(len(in_r), dtype=np.uint8)
    Z = np.zeros((len(chains_s), Z_r.shape[1]), dtype=np.uint8)
    for i, x in enumerate(in_r):
        Z[index_s[x]] = Z_r[i]
    B = boundary_matrix(cx, q + 1, s, s).data
    rank_B = DenseBooleanMatrix(B).rank() if B.size else 0
    rank_ZB = DenseBooleanMatrix(np.hstack((Z, B))).rank() if Z.size or B.size else 0
    beta = rank_ZB - rank_B
    if drop_essential_h0 and q == 0 and len(in_r) > 0:
        beta -= 1
    return int(beta)


# ---------------------------------------------------------------------------
# matchings


def _ground(u, v, ground):
    if ground == "euclidean":
        return math.sqrt((u[0] - v[0]) ** 2 + (u[1] - v[1]) ** 2)
    if ground == "l1":
        return abs(u[0] - v[0]) + abs(u[1] - v[1])
    return max(abs(u[0] - v[0]), abs(u[1] - v[1]))


def _to_diagonal(u, ground):
    # nearest diagonal point; for l1 every point between the two axis projections ties
    scale = {"euclidean": 1.0 / math.sqrt(2.0), "sup": 0.5, "l1": 1.0}[ground]
    return (u[1] - u[0]) * scale


def exhaustive_wasserstein(P1: Sequence, P2: Sequence, p: float = 2.0, ground: str = "euclidean") -> float:
    """Minimum over every partial matching, the rest going to the diagonal.

    ``P1`` and ``P2`` are sequences of (birth, death); ``p=inf`` gives the
    bottleneck cost.
    """
    A = [tuple(map(float, x)) for x in P1]
    Bp = [tuple(map(float, x)) for x in P2]
    if len(A) + len(Bp) > 8:
        raise ValueError("exhaustive matching is limited to 8 points in total")
    best = math.inf
    m = len(Bp)
    # assign each point of A to a distinct point of B or to the diagonal (None)
    for choice in itertools.product(*[[None] + list(range(m))] * len(A)):
        used = [c for c in choice if c is not None]
        if len(used) != len(set(used)):
            continue
        costs = []
        for i, c in enumerate(choice):
            costs.append(_to_diagonal(A[i], ground) if c is None else _ground(A[i], Bp[c], ground))
        for j in range(m):
            if j not in used:
                costs.append(_to_diagonal(Bp[j], ground))
        if not costs:
            return 0.0
        if math.isinf(p):
            total = max(costs)
        else:
            total = sum(c ** p for c in costs) ** (1.0 / p)
        best = min(best, total)
    return best


# ---------------------------------------------------------------------------
# weights and quadrature


def finite_difference_weight_check(w, u_grid) -> float:
    """Max over the grid of |w~'(u)| / (A u^(alpha-1)) with central differences."""
    u = np.asarray(u_grid, dtype=float)
    if np.any(u <= 0):
        raise ValueError("u_grid must be positive")
    h = 1e-5 * u
    deriv = (w(u + h) - w(u - h)) / (2.0 * h)
    bound = w.A * np.power(u, w.alpha - 1.0)
    return float(np.max(np.abs(deriv) / bound))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _panel_rule(lo: float, hi: float, width: float):
    n_panels = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wts = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return x, wts


def gaussian_cell_quadrature(point, bandwidth: float, cell) -> float:
    """Integral of the normalised isotropic Gaussian centred at ``point`` over a rectangle.

    ``cell`` is ``((x0, x1), (y0, y1))``. Composite 20-point Gauss-Legendre
    panels of width at most half a bandwidth in each direction; the panel
    error is far below 1e-12 for such widths.
    """
    (x0, x1), (y0, y1) = cell
    if not (x1 > x0 and y1 > y0):
        raise ValueError("cell must have positive area")
    s = float(bandwidth)
    xs, wx = _panel_rule(x0, x1, 0.5 * s)
    ys, wy = _panel_rule(y0, y1, 0.5 * s)
    cx, cy = point
    gx = np.exp(-((xs - cx) ** 2) / (2 * s * s))
    gy = np.exp(-((ys - cy) ** 2) / (2 * s * s))
    grid = np.outer(wx * gx, wy * gy)
    return float(grid.sum() / (2.0 * math.pi * s * s))


# ---------------------------------------------------------------------------
# geometry


def brute_force_enclosing_radius(points) -> float:
    """Smallest enclosing ball radius by trying every support set.

    The optimal ball is the circumscribed ball (centre in the affine hull) of
    some subset of at most d+1 points; keep the smallest one that contains
    everything.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = P.shape
    best = math.inf
    for k in range(1, min(n, d + 1) + 1):
        for S in itertools.combinations(range(n), k):
            base = P[S[0]]
            if k == 1:
                c = base
            else:
                U = P[list(S[1:])] - base
                G = U @ U.T
                if abs(np.linalg.det(G)) < 1e-14:
                    continue
                lam = np.linalg.solve(G, 0.5 * np.sum(U * U, axis=1))
                c = base + lam @ U
            r = float(np.sqrt(np.max(np.sum((P - c) ** 2, axis=1))))
            r_support = float(np.linalg.norm(P[S[0]] - c))
            if r <= r_support * (1 + 1e-12) + 1e-15:
                best = min(best, r)
    return best


def brute_force_values(points, kind: str, r_max: float = math.inf, max_dim: int = 2) -> dict:
    """Filtration value of every simplex up to ``max_dim`` by direct enumeration."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    n = P.shape[0]
    out = {}
    for k in range(1, max_dim + 2):
        for S in itertools.combinations(range(n), k):
            if k == 1:
                v = 0.0
            elif kind == "rips":
                v = max(float(np.sqrt(np.sum((P[a] - P[b]) ** 2))) for a, b in itertools.combinations(S, 2))
            else:
                v = brute_force_enclosing_radius(P[list(S)])
            if v <= r_max:
                out[S] = v
    return out
