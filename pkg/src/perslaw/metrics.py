"""Wasserstein and bottleneck distances between persistence diagrams.

Each point may be matched to a point of the other diagram or to its
orthogonal projection on the diagonal. The ground metric is Euclidean by
default; ``ground="sup"`` uses the max-norm common in other libraries and
``ground="l1"`` the taxicab norm, under which the distance to the diagonal
equals the persistence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .persistence import PersistenceDiagram

GROUNDS = ("euclidean", "sup", "l1")
DIAGONAL = -1


@dataclass
class MatchingResult:
    """Optimal matching. ``pairs`` holds ``(i, j)`` with -1 standing for the diagonal."""

    cost: float
    pairs: List[Tuple[int, int]] = field(default_factory=list)
    p: float = 2.0
    ground: str = "euclidean"

    @property
    def size(self) -> int:
        return len(self.pairs)

    def recompute(self, D1: PersistenceDiagram, D2: PersistenceDiagram) -> float:
        """Cost of ``pairs`` evaluated from scratch."""
        costs = []
        for i, j in self.pairs:
            if i >= 0 and j >= 0:
                costs.append(_point_dist(D1.births[i], D1.deaths[i], D2.births[j], D2.deaths[j], self.ground))
            elif i >= 0:
                costs.append(_diag_dist(D1.births[i], D1.deaths[i], self.ground))
            elif j >= 0:
                costs.append(_diag_dist(D2.births[j], D2.deaths[j], self.ground))
        if not costs:
            return 0.0
        if math.isinf(self.p):
            return float(max(costs))
        return float(sum(c ** self.p for c in costs) ** (1.0 / self.p))


def _point_dist(b1, d1, b2, d2, ground):
    if ground == "euclidean":
        return math.sqrt((b1 - b2) ** 2 + (d1 - d2) ** 2)
    if ground == "l1":
        return abs(b1 - b2) + abs(d1 - d2)
    return max(abs(b1 - b2), abs(d1 - d2))


def _diag_dist(b, d, ground):
    return (d - b) * _DIAG_FACTOR[ground]


_DIAG_FACTOR = {"euclidean": 1.0 / math.sqrt(2.0), "sup": 0.5, "l1": 1.0}


def _check(D1: PersistenceDiagram, D2: PersistenceDiagram, ground: str) -> None:
    if ground not in GROUNDS:
        raise ValueError(f"ground must be one of {GROUNDS}")
    for D in (D1, D2):
        if D.n_censored:
            raise ValueError(
                f"diagram of degree {D.degree} has {D.n_censored} censored point(s); "
                "distances need true death times"
            )


def _cross_distances(D1, D2, ground):
    db = D1.births[:, None] - D2.births[None, :]
    dd = D1.deaths[:, None] - D2.deaths[None, :]
    if ground == "euclidean":
        return np.sqrt(db * db + dd * dd)
    if ground == "l1":
        return np.abs(db) + np.abs(dd)
    return np.maximum(np.abs(db), np.abs(dd))


def _diagonal_distances(D, ground):
    return (D.deaths - D.births) * _DIAG_FACTOR[ground]


def _canonical(D: PersistenceDiagram):
    """Index order sorting points by (birth, death), and a key ordering whole diagrams."""
    order = np.lexsort((D.deaths, D.births))
    b, d = D.births[order], D.deaths[order]
    return order, (b.size, b.tobytes(), d.tobytes())


def wasserstein_distance(D1: PersistenceDiagram, D2: PersistenceDiagram, p: float = 2.0,
                         ground: str = "euclidean") -> MatchingResult:
    """p-Wasserstein distance, solved exactly as a square assignment problem.

    The cost matrix has size ``len(D1) + len(D2)``: point-to-point costs in
    the top-left block, each point to its own diagonal copy on the
    off-diagonal blocks, and zero between diagonal copies. ``p=inf`` gives
    the bottleneck distance. Points are sorted and the two diagrams put in a
    fixed order before solving, so the cost is bitwise symmetric and does
    not depend on point order.
    """
    if not p >= 1:
        raise ValueError("p must be at least 1")
    _check(D1, D2, ground)
    if math.isinf(p):
        return _bottleneck_matching(D1, D2, ground)
    k1, k2 = len(D1), len(D2)
    if k1 + k2 == 0:
        return MatchingResult(0.0, [], p, ground)
    o1, key1 = _canonical(D1)
    o2, key2 = _canonical(D2)
    swap = key2 < key1
    A = PersistenceDiagram(D1.degree, D1.births[o1], D1.deaths[o1])
    B = PersistenceDiagram(D2.degree, D2.births[o2], D2.deaths[o2])
    if swap:
        A, B = B, A
    ka, kb = len(A), len(B)
    C = np.full((ka + kb, ka + kb), np.inf)
    C[:ka, :kb] = _cross_distances(A, B, ground) ** p
    C[np.arange(ka), kb + np.arange(ka)] = _diagonal_distances(A, ground) ** p
    C[ka + np.arange(kb), np.arange(kb)] = _diagonal_distances(B, ground) ** p
    C[ka:, kb:] = 0.0
    rows, cols = linear_sum_assignment(C)
    pairs = []
    total = 0.0
    for r, c in zip(rows, cols):
        if r >= ka and c >= kb:
            continue
        i = int(r) if r < ka else DIAGONAL
        j = int(c) if c < kb else DIAGONAL
        if swap:
            i, j = j, i
        pairs.append((int(o1[i]) if i >= 0 else DIAGONAL, int(o2[j]) if j >= 0 else DIAGONAL))
        total += C[r, c]
    pairs.sort()
    return MatchingResult(float(total ** (1.0 / p)), pairs, p, ground)


def _feasible(cross, diag1, diag2, delta):
    """Perfect matching on the augmented graph using only edges of cost <= delta."""
    k1, k2 = cross.shape
    size = k1 + k2
    rows, cols = np.nonzero(cross <= delta)
    r_parts = [rows]
    c_parts = [cols]
    i1 = np.nonzero(diag1 <= delta)[0]
    r_parts.append(i1)
    c_parts.append(k2 + i1)
    j2 = np.nonzero(diag2 <= delta)[0]
    r_parts.append(k1 + j2)
    c_parts.append(j2)
    rr, cc = np.meshgrid(np.arange(k2), np.arange(k1), indexing="ij")
    r_parts.append(k1 + rr.ravel())
    c_parts.append(k2 + cc.ravel())
    R = np.concatenate(r_parts)
    Cc = np.concatenate(c_parts)
    graph = csr_matrix((np.ones(R.size, dtype=np.int8), (R, Cc)), shape=(size, size))
    match = maximum_bipartite_matching(graph, perm_type="column")
    return bool(np.all(match >= 0)), match


def _bottleneck_matching(D1, D2, ground) -> MatchingResult:
    k1, k2 = len(D1), len(D2)
    if k1 + k2 == 0:
        return MatchingResult(0.0, [], math.inf, ground)
    cross = _cross_distances(D1, D2, ground)
    diag1 = _diagonal_distances(D1, ground)
    diag2 = _diagonal_distances(D2, ground)
    cand = np.unique(np.concatenate((cross.ravel(), diag1, diag2, [0.0])))
    # the largest candidate is always feasible (every point to the diagonal)
    lo, hi = 0, cand.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _feasible(cross, diag1, diag2, cand[mid])[0]:
            hi = mid
        else:
            lo = mid + 1
    best = _feasible(cross, diag1, diag2, cand[lo])[1]
    pairs = []
    for r in range(k1 + k2):
        c = int(best[r])
        if r < k1 and c < k2:
            pairs.append((r, c))
        elif r < k1:
            pairs.append((r, DIAGONAL))
        elif c < k2:
            pairs.append((DIAGONAL, c))
    return MatchingResult(float(cand[lo]), pairs, math.inf, ground)


def bottleneck_distance(D1: PersistenceDiagram, D2: PersistenceDiagram, ground: str = "euclidean") -> float:
    """Smallest achievable maximum matching cost.

    Binary search over the sorted set of candidate costs, testing each with
    a Hopcroft-Karp perfect matching on the thresholded graph.
    """
    _check(D1, D2, ground)
    return _bottleneck_matching(D1, D2, ground).cost
