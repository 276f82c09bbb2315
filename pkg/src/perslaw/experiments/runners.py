"""Experiment runners. Each takes an :class:`ExperimentConfig` and returns a :class:`RunRecord`.

Replicate k of a run draws its sample with seed
``derive_seed(base_seed, kind, ..., k)``, so results never depend on the
order or the process in which replicates execute.
"""
from __future__ import annotations

import math
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..filtration import build_complex
from ..metrics import wasserstein_distance
from ..oracle import exhaustive_wasserstein
from ..persistence import PersistenceDiagram, compute_persistence, persistent_betti, total_persistence
from ..pointcloud import (PointCloud, density_from_name, derive_seed, make_rng, rescale,
                          sample_binomial, sample_poisson, sample_torus)
from ..representations import (FeatureSpec, ImageGrid, WeightSpec, default_bandwidth,
                               linear_representation, persistence_image)
from .config import ExperimentConfig, parse_p
from .pool import run_tasks, worker_count
from .record import RunRecord, check, mean_stderr
from .stability import stability_bound

AUDIT_TOLERANCE = 1e-9


# ---------------------------------------------------------------------------
# shared plumbing


def _new_record(cfg: ExperimentConfig) -> RunRecord:
    return RunRecord(kind=cfg.kind, config_hash=cfg.config_hash, config=cfg.to_dict())


def _sample_cube(cfg: ExperimentConfig, n: int, d: int, seed: int, process: Optional[str] = None) -> PointCloud:
    density = density_from_name(cfg.density)
    if (process or cfg.process) == "poisson":
        return sample_poisson(n, density, d, seed)
    return sample_binomial(n, density, d, seed)


def _rescaled_cube(cfg, n, d, seed, process=None) -> PointCloud:
    return rescale(_sample_cube(cfg, n, d, seed, process), float(n) ** (1.0 / d))


def _diagrams(cloud: PointCloud, cfg: ExperimentConfig, radii: Sequence[float], q_max: int,
              degrees: Sequence[int]) -> Tuple[List[PersistenceDiagram], float]:
    """Diagrams at the first radius of ``radii`` leaving no censored point in ``degrees``.

    When every radius leaves censored points the last diagrams are returned
    as they are; consumers needing true deaths then refuse them.
    """
    for r in radii:
        cx = build_complex(cloud, cfg.filtration, r, q_max)
        D = compute_persistence(cx, q_max)
        if all(D[q].n_censored == 0 for q in degrees):
            break
    return D, float(r)


def _collect(rec: RunRecord, tasks: Sequence[tuple], results: Sequence[dict]) -> List[dict]:
    ok = []
    for t, res in zip(tasks, results):
        if isinstance(res, dict) and "error" in res:
            rec.errors.append({"task": list(t[1:]), **res["error"]})
        else:
            ok.append(res)
    rec.replicates = ok
    rec.checks["all_replicates_completed"] = check(not rec.errors, len(ok), len(tasks),
                                                   f"{len(rec.errors)} replicate(s) failed")
    return ok


def _relative_change(a: float, b: float) -> float:
    return abs(b - a) / abs(b) if b != 0 else (0.0 if a == b else math.inf)


def _stabilization(rec: RunRecord, label: str, sizes: Sequence[int], means: Sequence[float],
                   tol: float) -> None:
    if len(means) < 2:
        return
    rel = _relative_change(means[-2], means[-1])
    rec.checks[f"stabilized[{label}]"] = check(
        rel < tol, rel, tol, f"relative change between n={sizes[-2]} and n={sizes[-1]}")


def _fmt_alpha(a: float) -> str:
    return f"{a:g}"


# ---------------------------------------------------------------------------
# scaled total persistence


def _rep_convergence(cfg: ExperimentConfig, d: int, n: int, k: int) -> dict:
    seed = derive_seed(cfg.base_seed, cfg.kind, cfg.process, d, n, k)
    X = _rescaled_cube(cfg, n, d, seed)
    D, r = _diagrams(X, cfg, cfg.rmax_schedule(n, d), max(cfg.degrees), cfg.degrees)
    values = [{"q": q, "alpha": a, "value": total_persistence(D[q], a) / n}
              for q in cfg.degrees for a in cfg.alphas]
    return {"d": d, "n": n, "k": k, "seed": seed, "n_points": len(X), "r_max": r, "values": values}


def run_convergence(cfg: ExperimentConfig, workers: Optional[int] = None) -> RunRecord:
    """Replicate means of ``n^{-1} Pers_alpha`` of the diagram of the rescaled cloud ``n^{1/d} X_n``."""
    rec = _new_record(cfg)
    tasks = [(cfg, d, n, k) for d in cfg.dims for n in cfg.sizes for k in range(cfg.replicates)]
    reps = _collect(rec, tasks, run_tasks(_rep_convergence, tasks, workers))
    rows = []
    series = []
    for d in cfg.dims:
        for q in cfg.degrees:
            for a in cfg.alphas:
                means = []
                for n in cfg.sizes:
                    vals = [v["value"] for r in reps if r["d"] == d and r["n"] == n
                            for v in r["values"] if v["q"] == q and v["alpha"] == a]
                    m, se = mean_stderr(vals)
                    means.append(m)
                    rows.append({"d": d, "q": q, "alpha": a, "n": n, "mean": m, "stderr": se,
                                 "replicates": len(vals)})
                label = f"d={d},q={q},alpha={_fmt_alpha(a)}"
                _stabilization(rec, label, cfg.sizes, means, cfg.tolerance)
                expected = cfg.params.get("expected")
                if expected is not None:
                    rec.checks[f"limit[{label}]"] = check(
                        abs(means[-1] - expected) / abs(expected) < cfg.tolerance, means[-1], expected,
                        "largest-n mean against the known limit")
                series.append({"label": label, "x": list(cfg.sizes), "y": means,
                               "yerr": [r["stderr"] for r in rows[-len(cfg.sizes):]]})
    rec.aggregates["convergence"] = rows
    rec.plots["convergence"] = {"series": series, "title": "scaled total persistence",
                                "xlabel": "n", "ylabel": "mean n^-1 Pers_alpha", "logx": True}
    return rec


# ---------------------------------------------------------------------------
# d = 1 spacings


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def limit_spacing_cdf(density_name: str) -> Callable[[np.ndarray], np.ndarray]:
    """CDF of rescaled one-dimensional spacings, ``1 - int kappa(x) exp(-u kappa(x)) dx``.

    Closed form ``1 - exp(-u)`` for the uniform density; otherwise
    composite 8-point Gauss-Legendre on 512 equal panels of [0, 1].
    """
    if density_name == "uniform":
        return lambda u: -np.expm1(-np.asarray(u, dtype=float))
    density = density_from_name(density_name)
    edges = np.linspace(0.0, 1.0, 513)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    wts = (half[:, None] * _GL_W[None, :]).ravel()
    kap = np.asarray(density.evaluator(x[:, None]), dtype=float)

    def cdf(u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.empty(u.shape)
        flat = u.ravel()
        res = out.reshape(-1)
        for s in range(0, flat.size, 1024):
            chunk = flat[s:s + 1024]
            res[s:s + 1024] = 1.0 - np.exp(-chunk[:, None] * kap[None, :]) @ (wts * kap)
        return out
    return cdf


def _rep_spacings(cfg: ExperimentConfig, n: int, k: int) -> dict:
    seed = derive_seed(cfg.base_seed, cfg.kind, cfg.process, 1, n, k)
    X = _rescaled_cube(cfg, n, 1, seed)
    D, r = _diagrams(X, cfg, cfg.rmax_schedule(n, 1), 0, [0])
    D0 = D[0]
    D0.require_uncensored("the spacings law")
    deaths = D0.deaths
    gaps = np.diff(np.sort(X.points[:, 0]))
    gaps = gaps[gaps > 0]
    ks = stats.kstest(deaths, limit_spacing_cdf(cfg.density)).statistic
    return {"n": n, "k": k, "seed": seed, "n_points": len(X), "r_max": r, "ks": float(ks),
            "pers1": float(deaths.sum() / n),
            "gaps_exact": bool(np.array_equal(np.sort(deaths), np.sort(gaps))),
            "mean_death": float(deaths.mean()) if deaths.size else math.nan}


def run_spacings_d1(cfg: ExperimentConfig, workers: Optional[int] = None) -> RunRecord:
    """Kolmogorov-Smirnov distance between rescaled H0 deaths in d=1 and their limit law.

    Uses the Rips convention (edge value = gap), under which the H0 deaths
    of a sorted one-dimensional cloud are exactly its consecutive gaps.
    """
    if list(cfg.dims) != [1] or list(cfg.degrees) != [0]:
        raise ValueError("the spacings experiment needs dims=[1] and degrees=[0]")
    if cfg.filtration != "rips":
        raise ValueError("the spacings experiment uses the Rips convention (edge value = gap)")
    rec = _new_record(cfg)
    tasks = [(cfg, n, k) for n in cfg.sizes for k in range(cfg.replicates)]
    reps = _collect(rec, tasks, run_tasks(_rep_spacings, tasks, workers))
    rows = []
    thr = cfg.params.get("ks_threshold", 0.03)
    for n in cfg.sizes:
        sel = [r for r in reps if r["n"] == n]
        ks_m, ks_se = mean_stderr([r["ks"] for r in sel])
        p_m, p_se = mean_stderr([r["pers1"] for r in sel])
        rows.append({"n": n, "ks_mean": ks_m, "ks_stderr": ks_se, "pers1_mean": p_m,
                     "pers1_stderr": p_se, "replicates": len(sel)})
    last = rows[-1]
    rec.checks["ks_mean"] = check(last["ks_mean"] < thr, last["ks_mean"], thr,
                                  f"mean KS statistic at n={cfg.sizes[-1]}")
    dev = abs(last["pers1_mean"] - 1.0)
    rec.checks["pers1_limit"] = check(dev < cfg.tolerance, last["pers1_mean"], 1.0,
                                      f"scaled Pers_1 within {cfg.tolerance:g} of 1")
    rec.checks["deaths_are_gaps"] = check(all(r["gaps_exact"] for r in reps), None, None,
                                          "H0 deaths equal the sorted gaps exactly")
    rec.aggregates["spacings"] = rows
    rec.plots["spacings_ks"] = {"series": [{"label": "mean KS", "x": list(cfg.sizes),
                                            "y": [r["ks_mean"] for r in rows],
                                            "yerr": [r["ks_stderr"] for r in rows]}],
                                "title": "KS distance to the spacing law", "xlabel": "n",
                                "ylabel": "KS", "logx": True}
    return rec


# ---------------------------------------------------------------------------
# tail of the diagram measure


def _rep_tail(cfg: ExperimentConfig, d: int, n: int, k: int) -> dict:
    seed = derive_seed(cfg.base_seed, cfg.kind, cfg.process, d, n, k)
    X = _rescaled_cube(cfg, n, d, seed)
    D, r = _diagrams(X, cfg, cfg.rmax_schedule(n, d), max(cfg.degrees), cfg.degrees)
    grid = sorted(cfg.M_grid)
    out = []
    for q in cfg.degrees:
        Dq = D[q]
        # censored deaths are lower bounds, so counts stay exact for M <= r_max
        counts = [int(np.count_nonzero(Dq.deaths >= M)) if (Dq.n_censored == 0 or M <= Dq.r_max) else None
                  for M in grid]
        out.append({"q": q, "counts": counts, "total": len(Dq), "n_censored": Dq.n_censored})
    return {"d": d, "n": n, "k": k, "seed": seed, "n_points": len(X), "r_max": r, "tails": out}


def run_tail_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> RunRecord:
    """Replicate mean of the diagram-measure mass of ``{death >= M}``, fitted against ``M^d``."""
    rec = _new_record(cfg)
    grid = sorted(cfg.M_grid)
    tasks = [(cfg, d, n, k) for d in cfg.dims for n in cfg.sizes for k in range(cfg.replicates)]
    reps = _collect(rec, tasks, run_tasks(_rep_tail, tasks, workers))
    min_count = cfg.params.get("min_count", 5)
    r2_min = cfg.params.get("r2_min", 0.9)
    rows, fits, series = [], [], []
    monotone = True
    for d in cfg.dims:
        for q in cfg.degrees:
            for n in cfg.sizes:
                tails = [t for r in reps if r["d"] == d and r["n"] == n for t in r["tails"] if t["q"] == q]
                if not tails:
                    continue
                for t in tails:
                    c = [x for x in t["counts"] if x is not None]
                    monotone &= all(c[i] >= c[i + 1] for i in range(len(c) - 1))
                means, sums = [], []
                for i, M in enumerate(grid):
                    col = [t["counts"][i] for t in tails]
                    valid = all(c is not None for c in col)
                    mean = float(np.mean(col)) / n if valid else math.nan
                    total = int(np.sum(col)) if valid else 0
                    means.append(mean)
                    sums.append(total)
                    rows.append({"d": d, "q": q, "n": n, "M": M, "mean_mass": mean, "count": total,
                                 "replicates": len(col)})
                label = f"d={d},q={q},n={n}"
                use = [i for i in range(len(grid)) if sums[i] >= min_count and means[i] > 0]
                if 0.0 in grid:
                    i0 = grid.index(0.0)
                    total_mass = float(np.mean([t["total"] for t in tails])) / n
                    rec.checks[f"mass_at_zero[{label}]"] = check(means[i0] == total_mass, means[i0],
                                                                 total_mass, "U_0 holds every point")
                if len(use) >= 3:
                    xs = np.array([grid[i] ** d for i in use])
                    ys = np.log([means[i] for i in use])
                    fit = stats.linregress(xs, ys)
                    r2 = float(fit.rvalue ** 2)
                    fits.append({"d": d, "q": q, "n": n, "slope": float(fit.slope),
                                 "intercept": float(fit.intercept), "r2": r2, "bins": len(use),
                                 "M_min": grid[use[0]], "M_max": grid[use[-1]]})
                    rec.checks[f"tail_slope_negative[{label}]"] = check(fit.slope < 0, float(fit.slope), 0.0)
                    rec.checks[f"tail_r2[{label}]"] = check(r2 > r2_min, r2, r2_min,
                                                            f"{len(use)} bins with >= {min_count} counts")
                    series.append({"label": f"{label} data", "x": list(xs), "y": list(ys), "style": "points"})
                    series.append({"label": f"{label} fit", "x": [xs[0], xs[-1]],
                                   "y": [fit.intercept + fit.slope * xs[0], fit.intercept + fit.slope * xs[-1]]})
                else:
                    rec.checks[f"tail_r2[{label}]"] = check(False, None, r2_min, "fewer than 3 usable bins")
    rec.checks["counts_nonincreasing"] = check(monotone, None, None, "per-replicate counts along M")
    rec.aggregates["tail"] = rows
    rec.aggregates["tail_fit"] = fits
    rec.plots["tail_fit"] = {"series": series, "title": "tail of the diagram measure",
                             "xlabel": "M^d", "ylabel": "log mean mass of {death >= M}"}
    return rec


# ---------------------------------------------------------------------------
# stability audit


def _audit_pair(cfg: ExperimentConfig, j: int) -> dict:
    P = cfg.params
    rng = make_rng(derive_seed(cfg.base_seed, cfg.kind, "pair", j))
    d = cfg.dims[j % len(cfg.dims)]
    q = cfg.degrees[j % len(cfg.degrees)]
    eta = P["etas"][j % len(P["etas"])]
    lo, hi = P["cloud_size"]
    for attempt in range(1000):
        m = int(rng.integers(lo, hi + 1))
        X = rng.random((m, d))
        Y = X + rng.uniform(-eta, eta, size=X.shape)
        D1 = compute_persistence(build_complex(PointCloud(X, d), cfg.filtration, math.inf, q), q)[q]
        D2 = compute_persistence(build_complex(PointCloud(Y, d), cfg.filtration, math.inf, q), q)[q]
        if 1 <= len(D1) + len(D2) <= P["max_points"]:
            break
    else:
        raise RuntimeError(f"pair {j}: no small enough diagram pair after 1000 draws")
    weights = [WeightSpec(w["family"], w["alpha"], w.get("B", 1.0)) for w in P["weights"]]
    bw = P.get("bandwidth") or 0.05
    grid = ImageGrid.covering([D1, D2], bw, P.get("resolution", 12))
    features = {"constant_one": FeatureSpec("constant_one"),
                "gaussian_bump": FeatureSpec("gaussian_bump", bandwidth=bw, grid=grid)}
    cases = []
    oracle_gap = 0.0
    for ground in P["grounds"]:
        for p_raw in P["ps"]:
            p = parse_p(p_raw)
            W = wasserstein_distance(D1, D2, p, ground).cost
            ref = exhaustive_wasserstein(D1.points, D2.points, p, ground)
            oracle_gap = max(oracle_gap, abs(W - ref))
            for a in P["a_values"]:
                for w in weights:
                    for fname in P["features"]:
                        phi = features[fname]
                        v1 = linear_representation(D1, w, phi).values
                        v2 = linear_representation(D2, w, phi).values
                        lhs = float(np.max(np.abs(np.asarray(v1) - np.asarray(v2)))) if np.size(v1) else 0.0
                        terms = stability_bound(D1, D2, w, phi, p, a, W)
                        cases.append({"ground": ground, "p": p_raw, "a": a, "weight": w.family,
                                      "alpha": w.alpha, "feature": fname, "W": W, "lhs": lhs,
                                      "rhs": terms.total, "margin": terms.total - lhs})
    return {"pair": j, "q": q, "d": d, "eta": eta, "n_points": m, "draws": attempt + 1,
            "D1": D1.points, "D2": D2.points, "oracle_gap": oracle_gap, "cases": cases}


def run_stability_audit(cfg: ExperimentConfig, workers: Optional[int] = None) -> RunRecord:
    """Evaluate both sides of the stability bound on perturbed-cloud diagram pairs.

    The representation norm is the sup-norm over image cells (absolute value
    for scalars), the norm in which the feature constants are certified.
    Every Wasserstein distance is cross-checked with exhaustive matching.
    """
    rec = _new_record(cfg)
    tasks = [(cfg, j) for j in range(cfg.params["n_pairs"])]
    pairs = _collect(rec, tasks, run_tasks(_audit_pair, tasks, workers))
    summary: Dict[tuple, dict] = {}
    for pr in pairs:
        for c in pr["cases"]:
            key = (c["ground"], str(c["p"]), c["a"], c["weight"], c["alpha"], c["feature"])
            s = summary.setdefault(key, {"ground": c["ground"], "p": c["p"], "a": c["a"],
                                         "weight": c["weight"], "alpha": c["alpha"], "feature": c["feature"],
                                         "cases": 0, "violations": 0, "min_margin": math.inf,
                                         "max_lhs_over_rhs": 0.0})
            s["cases"] += 1
            s["violations"] += int(c["margin"] < -AUDIT_TOLERANCE)
            s["min_margin"] = min(s["min_margin"], c["margin"])
            if c["rhs"] > 0:
                s["max_lhs_over_rhs"] = max(s["max_lhs_over_rhs"], c["lhs"] / c["rhs"])
            elif c["lhs"] > 0:
                s["max_lhs_over_rhs"] = math.inf
    rows = list(summary.values())
    rec.aggregates["audit_summary"] = rows
    for ground in cfg.params["grounds"]:
        sel = [r for r in rows if r["ground"] == ground]
        worst = min((r["min_margin"] for r in sel), default=math.nan)
        bad = sum(r["violations"] for r in sel)
        total = sum(r["cases"] for r in sel)
        rec.checks[f"margin_nonnegative[{ground}]"] = check(
            bad == 0 and bool(sel), worst, -AUDIT_TOLERANCE, f"{bad} of {total} cases below tolerance")
    series = []
    for ground in cfg.params["grounds"]:
        for p_raw in cfg.params["ps"]:
            cs = [c for pr in pairs for c in pr["cases"]
                  if c["ground"] == ground and str(c["p"]) == str(p_raw) and c["rhs"] > 0 and c["lhs"] > 0]
            series.append({"label": f"{ground},p={p_raw}", "x": [c["rhs"] for c in cs],
                           "y": [c["lhs"] for c in cs], "style": "points"})
    lims = [v for s in series for v in s["x"] + s["y"]]
    if lims:
        series.append({"label": "lhs = rhs", "x": [min(lims), max(lims)], "y": [min(lims), max(lims)]})
    rec.plots["audit_lhs_rhs"] = {"series": series, "title": "representation change against the bound",
                                  "xlabel": "bound", "ylabel": "sup-norm change", "logx": True, "logy": True}
    gap = max((pr["oracle_gap"] for pr in pairs), default=0.0)
    rec.checks["wasserstein_matches_oracle"] = check(gap <= AUDIT_TOLERANCE, gap, AUDIT_TOLERANCE)
    return rec


# ---------------------------------------------------------------------------
# convergence rate on the torus


def _rep_rate(cfg: ExperimentConfig, n: int, k) -> dict:
    P = cfg.params
    seed = derive_seed(cfg.base_seed, cfg.kind, "torus", n, k)
    X = sample_torus(n, P["torus_R"], P["torus_r"], seed)
    D, r = _diagrams(X, cfg, cfg.rmax_schedule(n, 2, absolute=True), max(cfg.degrees), [])
    values = []
    for q in cfg.degrees:
        Dq = D[q].uncensored()
        for a in cfg.alphas:
            values.append({"q": q, "alpha": a, "value": float(np.sum(Dq.persistence ** a)),
                           "n_censored": D[q].n_censored})
    return {"n": n, "k": k, "seed": seed, "r_max": r, "values": values}


def run_rate_fit(cfg: ExperimentConfig, workers: Optional[int] = None) -> RunRecord:
    """Fit the decay of ``|Pers_alpha(X_n) - Pers_alpha(X_ref)|`` against ``ln n / n`` on a torus.

    The filtration is truncated below the reach of the torus and classes
    still alive there (the torus's own cycles) are set aside, so the
    representation sees the sampling noise only. ``X_ref`` is one large
    sample shared by all replicates.
    """
    rec = _new_record(cfg)
    P = cfg.params
    tasks = [(cfg, P["n_ref"], "ref")] + [(cfg, n, k) for n in cfg.sizes for k in range(cfg.replicates)]
    results = run_tasks(_rep_rate, tasks, workers)
    reps = _collect(rec, tasks, results)
    ref = next((r for r in reps if r["k"] == "ref"), None)
    if ref is None:
        rec.checks["reference_available"] = check(False, None, None, "reference sample failed")
        return rec
    m = P["manifold_dim"]
    rows, fits, series = [], [], []
    slopes = []
    for q in cfg.degrees:
        for a in cfg.alphas:
            ref_v = next(v["value"] for v in ref["values"] if v["q"] == q and v["alpha"] == a)
            xs, ys = [], []
            for n in cfg.sizes:
                dist = [abs(v["value"] - ref_v) for r in reps if r["n"] == n and r["k"] != "ref"
                        for v in r["values"] if v["q"] == q and v["alpha"] == a]
                mean, se = mean_stderr(dist)
                rows.append({"q": q, "alpha": a, "n": n, "mean_distance": mean, "stderr": se,
                             "rate": math.log(n) / n, "replicates": len(dist)})
                if mean > 0:
                    xs.append(math.log(math.log(n) / n))
                    ys.append(math.log(mean))
            expected = a / m - 1.0
            label = f"q={q},alpha={_fmt_alpha(a)}"
            if len(xs) >= 2:
                fit = stats.linregress(xs, ys)
                slopes.append(float(fit.slope))
                fits.append({"q": q, "alpha": a, "slope": float(fit.slope), "expected": expected,
                             "intercept": float(fit.intercept), "r2": float(fit.rvalue ** 2)})
                tol = P["exponent_tol"]
                rec.checks[f"rate_exponent[{label}]"] = check(abs(fit.slope - expected) <= tol,
                                                              float(fit.slope), expected, f"within {tol:g}")
                series.append({"label": f"{label} data", "x": xs, "y": ys, "style": "points"})
                series.append({"label": f"{label} fit", "x": [xs[0], xs[-1]],
                               "y": [fit.intercept + fit.slope * xs[0], fit.intercept + fit.slope * xs[-1]]})
            else:
                rec.checks[f"rate_exponent[{label}]"] = check(False, None, expected, "too few levels")
    if len(cfg.alphas) > 1 and len(cfg.degrees) == 1 and len(slopes) == len(cfg.alphas):
        order = np.argsort(cfg.alphas)
        s = [slopes[i] for i in order]
        rec.checks["exponent_increases_with_alpha"] = check(all(s[i] < s[i + 1] for i in range(len(s) - 1)), s)
    rec.aggregates["rate"] = rows
    rec.aggregates["rate_fit"] = fits
    rec.plots["rate_fit"] = {"series": series, "title": "representation error against ln n / n",
                             "xlabel": "log(ln n / n)", "ylabel": "log mean distance"}
    return rec


# ---------------------------------------------------------------------------
# weight sweep of persistence images on the torus


def _window_mask(grid: ImageGrid, center: Tuple[float, float], half: float) -> np.ndarray:
    cb, cp = grid.centers()
    inb = np.abs(cb - center[0]) <= half
    inp = np.abs(cp - center[1]) <= half
    return inb[:, None] & inp[None, :]


def _rep_torus_images(cfg: ExperimentConfig, n: int, k: int) -> dict:
    P = cfg.params
    seed = derive_seed(cfg.base_seed, cfg.kind, "torus", n, k)
    X = sample_torus(n, P["torus_R"], P["torus_r"], seed)
    q = cfg.degrees[0]
    D, r = _diagrams(X, cfg, cfg.rmax_schedule(n, 2, absolute=True), q, [q])
    Dq = D[q]
    Dq.require_uncensored("the persistence image sweep")
    pers = Dq.persistence
    order = np.lexsort((Dq.births, -pers))
    top = [float(pers[i]) for i in order[:3]]
    out = {"n": n, "k": k, "seed": seed, "r_max": r, "n_points": len(Dq), "top_persistence": top}
    if len(Dq) < 2:
        out["flag"] = "fewer than 2 points"
        out["detected"] = False
        return out
    out["detected"] = bool(len(Dq) == 2 or top[1] >= P["detect_ratio"] * top[2])
    bw = P.get("bandwidth") or default_bandwidth(Dq)
    grid = ImageGrid.covering([Dq], bw, P["resolution"])
    half = P["window"] * bw
    centers = [(float(Dq.births[i]), float(pers[i])) for i in order[:2]]
    masks = [_window_mask(grid, c, half) for c in centers]
    union = masks[0] | masks[1]
    sweep = []
    images = {}
    for a in cfg.alphas:
        w = WeightSpec("power", a, strict=False)
        img = persistence_image(Dq, w, grid, bw).values
        total = float(img.sum())
        m1, m2 = float(img[masks[0]].sum()), float(img[masks[1]].sum())
        signal = float(img[union].sum())
        noise = total - signal
        sweep.append({"alpha": a, "signal": signal, "noise": noise,
                      "ratio": signal / noise if noise > 0 else math.inf,
                      "mass_top1": m1, "mass_top2": m2,
                      "dominance": max(m1, m2) / min(m1, m2) if min(m1, m2) > 0 else math.inf})
        if k == 0:
            images[f"image_n{n}_alpha{_fmt_alpha(a)}"] = img
    out.update({"bandwidth": bw, "grid": grid.to_dict(), "sweep": sweep, "images": images})
    return out


def run_torus_images(cfg: ExperimentConfig, workers: Optional[int] = None) -> RunRecord:
    """Signal-to-noise image mass of torus H1 diagrams as the weight exponent grows.

    Signal is the image mass inside square windows of half-width
    ``window`` bandwidths around the two most persistent points; noise is
    the rest. Images of replicate 0 are kept as files.
    """
    rec = _new_record(cfg)
    P = cfg.params
    tasks = [(cfg, n, k) for n in cfg.sizes for k in range(cfg.replicates)]
    reps = _collect(rec, tasks, run_tasks(_rep_torus_images, tasks, workers))
    for r in reps:
        for name, img in sorted(r.pop("images", {}).items()):
            rec.images[name] = img
    rows = []
    alphas = list(cfg.alphas)
    small = sorted(a for a in alphas if a <= 2)
    for n in cfg.sizes:
        sel = [r for r in reps if r["n"] == n and "sweep" in r]
        for a in alphas:
            ratios = [s["ratio"] for r in sel for s in r["sweep"] if s["alpha"] == a]
            dom = [s["dominance"] for r in sel for s in r["sweep"] if s["alpha"] == a]
            m, se = mean_stderr(ratios)
            rows.append({"n": n, "alpha": a, "ratio_mean": m, "ratio_stderr": se,
                         "ratio_min": min(ratios, default=math.nan),
                         "dominance_min": min(dom, default=math.nan), "replicates": len(ratios)})
        detected = sum(1 for r in reps if r["n"] == n and r.get("detected"))
        rows.append({"n": n, "alpha": None, "detected": detected,
                     "flagged": sum(1 for r in reps if r["n"] == n and "flag" in r)})
    n_top = max(cfg.sizes)
    sel = [r for r in reps if r["n"] == n_top and "sweep" in r]
    if len(small) >= 2:
        def increasing(r):
            vals = [next(s["ratio"] for s in r["sweep"] if s["alpha"] == a) for a in small]
            return all(vals[i] < vals[i + 1] for i in range(len(vals) - 1))
        good = sum(increasing(r) for r in sel)
        rec.checks[f"ratio_increasing[n={n_top}]"] = check(
            bool(sel) and good == len(sel), good, len(sel),
            f"seeds with strictly increasing ratio over alpha={small}")
    big = max(alphas)
    if big > 2:
        dom = [next(s["dominance"] for s in r["sweep"] if s["alpha"] == big) for r in sel]
        rec.checks[f"dominance[n={n_top},alpha={_fmt_alpha(big)}]"] = check(
            bool(dom) and min(dom) >= P["dominance"], min(dom, default=math.nan), P["dominance"],
            "smallest ratio of the two windows' masses over seeds")
    detected = sum(1 for r in reps if r["n"] == n_top and r.get("detected"))
    rec.checks[f"two_features_detected[n={n_top}]"] = check(
        detected >= P["min_detected"], detected, P["min_detected"],
        f"second persistence >= {P['detect_ratio']:g} x third")
    rec.aggregates["torus_images"] = rows
    series = []
    for n in cfg.sizes:
        pts = [r for r in rows if r["n"] == n and r["alpha"] is not None and r["alpha"] <= 2]
        series.append({"label": f"n={n}", "x": [r["alpha"] for r in pts],
                       "y": [r["ratio_mean"] for r in pts]})
    rec.plots["torus_images_ratio"] = {"series": series, "title": "signal/noise image mass",
                                  "xlabel": "alpha", "ylabel": "ratio", "logy": True}
    return rec


# ---------------------------------------------------------------------------
# Betti numbers


def _rep_betti(cfg: ExperimentConfig, process: str, d: int, n: int, k: int) -> dict:
    seed = derive_seed(cfg.base_seed, cfg.kind, process, d, n, k)
    X = _rescaled_cube(cfg, n, d, seed, process)
    r = float(cfg.params["betti_r"])
    q_max = max(cfg.degrees)
    # any radius above r works: persistent_betti counts points still alive past r
    cx = build_complex(X, cfg.filtration, r * (1.0 + 1e-9), q_max)
    D = compute_persistence(cx, q_max)
    values = []
    for q in cfg.degrees:
        beta = persistent_betti(D[q], r, r) + (1 if q == 0 and len(X) > 0 else 0)
        values.append({"q": q, "betti": beta, "value": beta / n})
    return {"process": process, "d": d, "n": n, "k": k, "seed": seed, "n_points": len(X), "values": values}


def run_betti_convergence(cfg: ExperimentConfig, workers: Optional[int] = None) -> RunRecord:
    """Replicate means of ``n^{-1} beta_q`` of the complex of ``n^{1/d} X_n`` at a fixed radius."""
    rec = _new_record(cfg)
    processes = ["binomial", "poisson"] if cfg.params.get("compare_processes") else [cfg.process]
    tasks = [(cfg, pr, d, n, k) for pr in processes for d in cfg.dims for n in cfg.sizes
             for k in range(cfg.replicates)]
    reps = _collect(rec, tasks, run_tasks(_rep_betti, tasks, workers))
    rows, series = [], []
    last: Dict[tuple, Tuple[float, float]] = {}
    for pr in processes:
        for d in cfg.dims:
            for q in cfg.degrees:
                means = []
                for n in cfg.sizes:
                    vals = [v["value"] for r in reps if r["process"] == pr and r["d"] == d and r["n"] == n
                            for v in r["values"] if v["q"] == q]
                    m, se = mean_stderr(vals)
                    means.append(m)
                    rows.append({"process": pr, "d": d, "q": q, "n": n, "mean": m, "stderr": se,
                                 "replicates": len(vals)})
                    last[(pr, d, q)] = (m, se)
                _stabilization(rec, f"{pr},d={d},q={q}", cfg.sizes, means, cfg.tolerance)
                series.append({"label": f"{pr} d={d} q={q}", "x": list(cfg.sizes), "y": means,
                               "yerr": [r["stderr"] for r in rows[-len(cfg.sizes):]]})
    if len(processes) == 2:
        for d in cfg.dims:
            for q in cfg.degrees:
                (mb, sb), (mp, sp) = last[("binomial", d, q)], last[("poisson", d, q)]
                band = 3.0 * math.sqrt((sb if math.isfinite(sb) else 0.0) ** 2
                                       + (sp if math.isfinite(sp) else 0.0) ** 2)
                rec.checks[f"poisson_matches_binomial[d={d},q={q}]"] = check(
                    abs(mb - mp) <= band, abs(mb - mp), band, f"at n={cfg.sizes[-1]}, 3 joint standard errors")
    rec.aggregates["betti"] = rows
    rec.plots["betti"] = {"series": series, "title": f"n^-1 beta_q at r={cfg.params['betti_r']:g}",
                          "xlabel": "n", "ylabel": "mean n^-1 beta_q", "logx": True}
    return rec


# ---------------------------------------------------------------------------
# marginals of the diagram measure


def _rep_marginals(cfg: ExperimentConfig, d: int, n: int, k: int) -> dict:
    seed = derive_seed(cfg.base_seed, cfg.kind, cfg.process, d, n, k)
    X = _rescaled_cube(cfg, n, d, seed)
    D, r = _diagrams(X, cfg, cfg.rmax_schedule(n, d), max(cfg.degrees), cfg.degrees)
    P = cfg.params
    edges = _hist_edges(P["bin_width"], P["hist_max"])
    out = []
    for q in cfg.degrees:
        Dq = D[q]
        Dq.require_uncensored("marginal histograms")
        hb = _histogram(Dq.births, edges)
        hd = _histogram(Dq.deaths, edges)
        out.append({"q": q, "births": hb, "deaths": hd, "nonzero_births": int(np.count_nonzero(Dq.births))})
    return {"d": d, "n": n, "k": k, "seed": seed, "r_max": r, "hists": out}


def _hist_edges(width: float, top: float) -> np.ndarray:
    return np.arange(int(math.ceil(top / width)) + 1) * width


def _histogram(x: np.ndarray, edges: np.ndarray) -> List[int]:
    """Counts per bin plus one overflow bin for values beyond the last edge."""
    counts, _ = np.histogram(np.minimum(x, edges[-1]), bins=edges)
    over = int(np.count_nonzero(x > edges[-1]))
    counts[-1] -= over
    return [int(c) for c in counts] + [over]


def run_marginal_histograms(cfg: ExperimentConfig, workers: Optional[int] = None) -> RunRecord:
    """Pooled birth and death histograms of the rescaled diagrams, with atom and split-half checks."""
    rec = _new_record(cfg)
    P = cfg.params
    tasks = [(cfg, d, n, k) for d in cfg.dims for n in cfg.sizes for k in range(cfg.replicates)]
    reps = _collect(rec, tasks, run_tasks(_rep_marginals, tasks, workers))
    edges = _hist_edges(P["bin_width"], P["hist_max"])
    centers = [float(x) for x in 0.5 * (edges[:-1] + edges[1:])]
    rows = []
    series = []
    for d in cfg.dims:
        for n in cfg.sizes:
            for q in cfg.degrees:
                hs = [(r["k"], h) for r in reps if r["d"] == d and r["n"] == n for h in r["hists"] if h["q"] == q]
                if not hs:
                    continue
                label = f"d={d},n={n},q={q}"
                for axis in ("births", "deaths"):
                    M = np.array([h[axis] for _, h in hs])
                    pooled = M.sum(axis=0)
                    total = int(pooled.sum())
                    frac = float(pooled.max() / total) if total else math.nan
                    if total:
                        series.append({"label": f"{label},{axis}", "x": centers,
                                       "y": [float(c) / total for c in pooled[:-1]]})
                    for i, c in enumerate(pooled):
                        lo = float(edges[i]) if i < len(edges) - 1 else float(edges[-1])
                        rows.append({"d": d, "n": n, "q": q, "axis": axis, "bin_lo": lo,
                                     "overflow": i == len(edges) - 1, "count": int(c)})
                    if q == 0 and axis == "births":
                        nz = sum(h["nonzero_births"] for _, h in hs)
                        rec.checks[f"births_at_zero[{label}]"] = check(nz == 0, nz, 0, "H0 births are 0")
                    else:
                        rec.checks[f"no_atoms[{label},{axis}]"] = check(
                            frac <= P["max_bin_fraction"], frac, P["max_bin_fraction"], "largest bin share")
                        even = M[[i for i, (k, _) in enumerate(hs) if k % 2 == 0]].sum(axis=0)
                        odd = M[[i for i, (k, _) in enumerate(hs) if k % 2 == 1]].sum(axis=0)
                        keep = (even + odd) > 0
                        if even.sum() > 0 and odd.sum() > 0 and keep.sum() > 1:
                            pval = float(stats.chi2_contingency(np.vstack((even[keep], odd[keep])))[1])
                            rec.checks[f"split_halves_agree[{label},{axis}]"] = check(
                                pval >= P["chi2_level"], pval, P["chi2_level"], "chi-square p-value")
    rec.aggregates["marginals"] = rows
    rec.plots["marginals"] = {"series": series, "title": "pooled marginals of the rescaled diagrams",
                              "xlabel": "value", "ylabel": "share of points per bin"}
    return rec


# ---------------------------------------------------------------------------


RUNNERS = {
    "convergence": run_convergence,
    "spacings_d1": run_spacings_d1,
    "tail": run_tail_experiment,
    "stability_audit": run_stability_audit,
    "rate_fit": run_rate_fit,
    "torus_images": run_torus_images,
    "betti_convergence": run_betti_convergence,
    "marginal_histograms": run_marginal_histograms,
}


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> RunRecord:
    """Dispatch on ``cfg.kind`` and record wall-clock time and worker count."""
    t0 = time.perf_counter()
    rec = RUNNERS[cfg.kind](cfg, workers)
    rec.timing = {"wall_clock_s": time.perf_counter() - t0, "workers": worker_count(workers)}
    return rec
