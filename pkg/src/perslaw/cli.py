"""Command line interface: ``perslaw <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .experiments import ExperimentConfig, run_experiment
from .experiments.record import plain
from .filtration import SimplexBudgetExceeded, build_complex
from .metrics import GROUNDS, wasserstein_distance
from .persistence import (PersistenceDiagram, compute_persistence, read_diagrams_csv,
                          write_diagrams_csv)
from .pointcloud import (DENSITY_PRESETS, density_from_name, read_cloud_csv, sample_binomial,
                         sample_poisson, sample_torus, write_cloud_csv)
from .representations import FeatureSpec, ImageGrid, WeightSpec, linear_representation, persistence_image, silhouette


def _p_value(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def _emit(obj, path: Optional[str] = None) -> None:
    text = json.dumps(plain(obj), indent=1, sort_keys=True)
    if path:
        Path(path).write_text(text)
    else:
        print(text)


def _diagram_of_degree(path: str, q: int) -> PersistenceDiagram:
    for D in read_diagrams_csv(path):
        if D.degree == q:
            return D
    return PersistenceDiagram(q, [], [])


# ---------------------------------------------------------------------------


def cmd_sample(args) -> int:
    if args.shape == "torus":
        cloud = sample_torus(args.n, args.R, args.r, args.seed)
    else:
        density = density_from_name(args.density)
        sampler = sample_poisson if args.process == "poisson" else sample_binomial
        cloud = sampler(args.n, density, args.d, args.seed)
    write_cloud_csv(cloud, args.out)
    _emit({"points": len(cloud), "dim": cloud.dim, "out": args.out})
    return 0


def cmd_complex_stats(args) -> int:
    cloud = read_cloud_csv(args.input)
    try:
        cx = build_complex(cloud, args.filtration, args.r_max, args.q_max, args.budget)
    except SimplexBudgetExceeded as exc:
        _emit({"error": "SimplexBudgetExceeded", "estimate": exc.estimate, "budget": exc.budget,
               "message": str(exc)})
        return 2
    _emit(cx.stats(args.bins))
    return 0


def cmd_persist(args) -> int:
    cloud = read_cloud_csv(args.input)
    try:
        cx = build_complex(cloud, args.filtration, args.r_max, args.q_max, args.budget)
    except SimplexBudgetExceeded as exc:
        _emit({"error": "SimplexBudgetExceeded", "estimate": exc.estimate, "budget": exc.budget,
               "message": str(exc)})
        return 2
    t0 = time.perf_counter()
    diagrams = compute_persistence(cx, args.q_max)
    elapsed = time.perf_counter() - t0
    write_diagrams_csv(diagrams, args.out, pairing=args.pairing)
    summary = {"out": args.out, "filtration": args.filtration, "r_max": args.r_max,
               "runtime_ms": 1000 * elapsed, "degrees": []}
    for D in diagrams:
        entry = {"degree": D.degree, "points": len(D), "censored": D.n_censored,
                 "zero_persistence_dropped": D.n_zero_persistence, "total_persistence": {}}
        for a in args.alpha:
            # censored points have no true death, so the sum is undefined
            entry["total_persistence"][f"{a:g}"] = (None if D.n_censored
                                                    else float(np.sum(D.persistence ** a)))
        summary["degrees"].append(entry)
    _emit(summary)
    return 0


def cmd_distance(args) -> int:
    D1 = _diagram_of_degree(args.a, args.degree)
    D2 = _diagram_of_degree(args.b, args.degree)
    t0 = time.perf_counter()
    res = wasserstein_distance(D1, D2, args.p, args.ground)
    elapsed = time.perf_counter() - t0
    _emit({"cost": res.cost, "p": "inf" if math.isinf(args.p) else args.p, "ground": args.ground,
           "degree": args.degree, "matching_size": res.size, "runtime_ms": 1000 * elapsed})
    return 0


def cmd_represent(args) -> int:
    D = _diagram_of_degree(args.input, args.degree)
    w = WeightSpec(args.weight, args.alpha, args.B, strict=not args.allow_small_alpha)
    if args.kind == "image":
        grid = None
        if args.birth_range and args.pers_range:
            grid = ImageGrid(tuple(args.birth_range), tuple(args.pers_range), args.resolution)
        rep = persistence_image(D, w, grid, args.bandwidth, args.resolution)
        matrix = np.atleast_2d(rep.values)
    elif args.kind == "silhouette":
        rep = silhouette(D, w, args.resolution)
        matrix = np.atleast_2d(rep.values)
    else:
        rep = linear_representation(D, w, FeatureSpec("constant_one"))
        matrix = np.atleast_2d(rep.values)
    np.savetxt(args.out, matrix, delimiter=",")
    meta = {"kind": args.kind, "degree": args.degree, "weight": w.to_dict(), "shape": list(matrix.shape),
            "cell": rep.cell, "points": len(D)}
    meta.update({k: v for k, v in rep.meta.items() if k != "t"})
    if "t" in rep.meta:
        meta["t_range"] = [float(rep.meta["t"][0]), float(rep.meta["t"][-1])]
    _emit(meta, args.out + ".json")
    _emit(meta)
    return 0


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    out = args.out or cfg.output_dir
    rec = run_experiment(cfg, args.workers)
    if out:
        rec.write(out)
    print(f"{cfg.kind} config={cfg.config_hash[:12]} fingerprint={rec.fingerprint()[:12]} "
          f"wall={rec.timing['wall_clock_s']:.1f}s errors={len(rec.errors)}")
    for name, c in rec.checks.items():
        print(f"  [{'pass' if c['passed'] else 'FAIL'}] {name}: value={c['value']} threshold={c['threshold']}")
    return 0 if rec.passed else 1


def cmd_verify(args) -> int:
    from .verify import run_verification

    rows = run_verification(args.clouds, args.seed)
    width = max(len(r["check"]) for r in rows)
    print(f"{'check':<{width}}  {'cases':>6}  {'mismatches':>10}  worst")
    for r in rows:
        print(f"{r['check']:<{width}}  {r['cases']:>6}  {r['mismatches']:>10}  {r['worst']:.3g}")
    return 0 if all(r["mismatches"] == 0 for r in rows) else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="perslaw", description="Persistence diagrams of random point clouds.")
    ap.add_argument("--version", action="version", version=f"perslaw {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="draw a point cloud and write it as CSV")
    s.add_argument("--shape", choices=("cube", "torus"), default="cube")
    s.add_argument("--n", type=int, required=True, help="points (binomial) or intensity (poisson)")
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--density", choices=sorted(DENSITY_PRESETS), default="uniform")
    s.add_argument("--process", choices=("binomial", "poisson"), default="binomial")
    s.add_argument("--R", type=float, default=1.8, help="torus major radius")
    s.add_argument("--r", type=float, default=1.0, help="torus minor radius")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    def complex_args(p):
        p.add_argument("--input", required=True, help="cloud CSV with header x1..xd")
        p.add_argument("--filtration", choices=("rips", "cech"), default="rips")
        p.add_argument("--r-max", type=float, default=math.inf)
        p.add_argument("--q-max", type=int, default=1)
        p.add_argument("--budget", type=int, default=None, help="simplex budget (default $PERSLAW_SIMPLEX_BUDGET)")

    s = sub.add_parser("complex-stats", help="simplex counts and value histograms as JSON")
    complex_args(s)
    s.add_argument("--bins", type=int, default=20)
    s.set_defaults(func=cmd_complex_stats)

    s = sub.add_parser("persist", help="persistence diagrams to CSV plus a JSON summary")
    complex_args(s)
    s.add_argument("--out", required=True)
    s.add_argument("--pairing", action="store_true", help="add creating and killing simplices")
    s.add_argument("--alpha", type=float, nargs="+", default=[1.0])
    s.set_defaults(func=cmd_persist)

    s = sub.add_parser("distance", help="Wasserstein or bottleneck distance of two diagram CSVs")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--degree", type=int, default=1)
    s.add_argument("--p", type=_p_value, default=2.0, help="order, 'inf' for bottleneck")
    s.add_argument("--ground", choices=GROUNDS, default="euclidean")
    s.set_defaults(func=cmd_distance)

    s = sub.add_parser("represent", help="weighted representation of a diagram CSV")
    s.add_argument("--input", required=True)
    s.add_argument("--degree", type=int, default=1)
    s.add_argument("--kind", choices=("image", "silhouette", "scalar"), default="image")
    s.add_argument("--weight", choices=("power", "arctan"), default="power")
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--B", type=float, default=1.0)
    s.add_argument("--allow-small-alpha", action="store_true", help="accept 0 <= alpha < 1")
    s.add_argument("--bandwidth", type=float, default=None)
    s.add_argument("--resolution", type=int, default=20)
    s.add_argument("--birth-range", type=float, nargs=2, default=None)
    s.add_argument("--pers-range", type=float, nargs=2, default=None)
    s.add_argument("--out", required=True, help="CSV matrix; a JSON sidecar goes next to it")
    s.set_defaults(func=cmd_represent)

    s = sub.add_parser("experiment", help="run a configured experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=None)
    s.add_argument("--workers", type=int, default=None, help="default $PERSLAW_WORKERS or 1")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("verify", help="cross-check the fast paths against brute-force oracles")
    s.add_argument("--clouds", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_verify)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return int(args.func(args) or 0)


if __name__ == "__main__":
    sys.exit(main())
