"""Cross-checks of the fast code paths against the brute-force oracles."""
from __future__ import annotations

import math
from typing import Dict, List, Tuple

import numpy as np

from . import oracle
from .filtration import build_complex, min_enclosing_ball
from .metrics import bottleneck_distance, wasserstein_distance
from .persistence import PersistenceDiagram, compute_persistence, persistent_betti
from .pointcloud import PointCloud, derive_seed, make_rng
from .representations import ImageGrid, WeightSpec, persistence_image


def betti_case(seed: int, kind: str, n_range=(4, 12), dims=(2, 3), q_max: int = 2,
               pairs: int = 5) -> Tuple[int, int]:
    """Compare diagram-based and rank-based persistent Betti numbers on one random cloud.

    Returns ``(comparisons, mismatches)``; the (r, s) pairs are drawn from
    the filtration values so every interesting threshold is exercised.
    """
    rng = make_rng(seed)
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    d = int(rng.choice(dims))
    cloud = PointCloud(rng.random((n, d)), d)
    cx = build_complex(cloud, kind, math.inf, q_max)
    D = compute_persistence(cx, q_max)
    vals = np.concatenate(cx.values_by_dim)
    cases = bad = 0
    for _ in range(pairs):
        r, s = sorted(rng.choice(vals, 2))
        for q in range(q_max + 1):
            cases += 1
            bad += int(persistent_betti(D[q], r, s) != oracle.betti_via_rank(cx, q, r, s))
    return cases, bad


def _random_diagram(rng, k: int) -> PersistenceDiagram:
    b = rng.random(k)
    return PersistenceDiagram(1, b, b + rng.random(k) * 0.5 + 1e-3)


def run_verification(n_clouds: int = 20, seed: int = 0) -> List[Dict]:
    """One row per check: cases, mismatches and worst absolute discrepancy."""
    rows = []
    cases = bad = 0
    for i in range(n_clouds):
        c, b = betti_case(derive_seed(seed, "betti", i), ("rips", "cech")[i % 2], n_range=(4, 9), q_max=1)
        cases += c
        bad += b
    rows.append({"check": "persistent Betti vs rank oracle", "cases": cases, "mismatches": bad, "worst": float(bad)})

    rng = make_rng(derive_seed(seed, "values"))
    worst, cases, bad = 0.0, 0, 0
    for i in range(max(1, n_clouds // 2)):
        P = rng.random((int(rng.integers(3, 7)), int(rng.choice([2, 3]))))
        for kind in ("rips", "cech"):
            cx = build_complex(PointCloud(P, P.shape[1]), kind, math.inf, 2)
            ref = oracle.brute_force_values(P, kind, math.inf, 3)
            for S, V in zip(cx.simplices_by_dim, cx.values_by_dim):
                for s, v in zip(S, V):
                    gap = abs(ref[tuple(int(x) for x in s)] - v)
                    worst = max(worst, gap)
                    cases += 1
                    bad += int(gap > 1e-9)
    rows.append({"check": "filtration values vs enumeration", "cases": cases, "mismatches": bad, "worst": worst})

    worst, bad = 0.0, 0
    for i in range(n_clouds * 5):
        P = rng.random((int(rng.integers(1, 6)), 3))
        gap = abs(min_enclosing_ball(P)[1] - oracle.brute_force_enclosing_radius(P))
        worst = max(worst, gap)
        bad += int(gap > 1e-9)
    rows.append({"check": "enclosing ball vs support enumeration", "cases": n_clouds * 5,
                 "mismatches": bad, "worst": worst})

    worst, cases, bad = 0.0, 0, 0
    for i in range(n_clouds * 5):
        D1 = _random_diagram(rng, int(rng.integers(0, 5)))
        D2 = _random_diagram(rng, int(rng.integers(0, 9 - len(D1))))
        for ground in ("euclidean", "sup"):
            for p in (1.0, 2.0, math.inf):
                fast = bottleneck_distance(D1, D2, ground) if math.isinf(p) else \
                    wasserstein_distance(D1, D2, p, ground).cost
                gap = abs(fast - oracle.exhaustive_wasserstein(D1.points, D2.points, p, ground))
                worst = max(worst, gap)
                cases += 1
                bad += int(gap > 1e-9)
    rows.append({"check": "Wasserstein/bottleneck vs exhaustive matching", "cases": cases,
                 "mismatches": bad, "worst": worst})

    worst, cases, bad = 0.0, 0, 0
    for i in range(max(1, n_clouds // 4)):
        D = _random_diagram(rng, 3)
        bw = 0.1
        grid = ImageGrid((0.0, 1.0), (0.0, 0.6), (6, 5))
        img = persistence_image(D, WeightSpec("power", 1.0), grid, bw).values
        be, pe = grid.birth_edges, grid.pers_edges
        for a in range(6):
            for b in range(5):
                ref = sum(float(p) * oracle.gaussian_cell_quadrature(
                    (bb, p), bw, ((be[a], be[a + 1]), (pe[b], pe[b + 1])))
                          for bb, p in zip(D.births, D.persistence))
                gap = abs(img[a, b] - ref)
                worst = max(worst, gap)
                cases += 1
                bad += int(gap > 1e-10)
    rows.append({"check": "image cells vs Gauss-Legendre quadrature", "cases": cases,
                 "mismatches": bad, "worst": worst})

    u = np.geomspace(1e-3, 1e2, 200)
    worst, bad = 0.0, 0
    for w in (WeightSpec("power", 1.0), WeightSpec("power", 2.5), WeightSpec("arctan", 1.0, 3.0),
              WeightSpec("arctan", 2.0, 0.5)):
        ratio = oracle.finite_difference_weight_check(w, u)
        worst = max(worst, ratio)
        bad += int(ratio > 1.0 + 1e-6)
    rows.append({"check": "weight derivative bound (finite differences)", "cases": 4,
                 "mismatches": bad, "worst": worst})
    return rows
