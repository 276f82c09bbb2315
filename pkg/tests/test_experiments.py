import json
import math
from importlib import resources

import jsonschema
import numpy as np
import pytest

from perslaw.experiments import (ExperimentConfig, RUNNERS, limit_spacing_cdf, run_experiment, run_tasks,
                                 stability_bound, worker_count)
from perslaw.experiments.config import parse_p
from perslaw.experiments.stability import G, pers_sum
from perslaw.filtration import SimplexBudgetExceeded
from perslaw.metrics import wasserstein_distance
from perslaw.persistence import PersistenceDiagram
from perslaw.representations import FeatureSpec, ImageGrid, WeightSpec, linear_representation

SMALL = {
    "convergence": {"sizes": [60, 120], "replicates": 3},
    "spacings_d1": {"sizes": [400], "replicates": 2},
    "tail": {"sizes": [200], "replicates": 3},
    "stability_audit": {"params": {"n_pairs": 6}},
    "rate_fit": {"sizes": [100, 200], "replicates": 2, "params": {"n_ref": 300}},
    "torus_images": {"sizes": [250], "replicates": 2, "params": {"resolution": 20, "min_detected": 1}},
    "betti_convergence": {"sizes": [100, 200], "replicates": 3},
    "marginal_histograms": {"sizes": [300], "replicates": 2},
}


def small(kind, **extra):
    data = {"kind": kind, "base_seed": 11, **SMALL[kind]}
    data.update(extra)
    return ExperimentConfig.from_dict(data)


def test_shipped_configs_validate():
    folder = resources.files("perslaw.experiments").joinpath("configs")
    names = sorted(p.name for p in folder.iterdir() if p.name.endswith(".json"))
    assert len(names) == 8
    for name in names:
        cfg = ExperimentConfig.from_file(folder.joinpath(name))
        assert cfg.kind in RUNNERS


def test_schema_rejects_unknown_fields():
    with pytest.raises(jsonschema.ValidationError):
        ExperimentConfig.from_dict({"kind": "tail", "bogus": 1})
    with pytest.raises(jsonschema.ValidationError):
        ExperimentConfig.from_dict({"kind": "nope"})
    with pytest.raises(jsonschema.ValidationError):
        ExperimentConfig.from_dict({"kind": "tail", "params": {"unknown_param": 1}})
    with pytest.raises(jsonschema.ValidationError):
        ExperimentConfig.from_dict({"kind": "tail", "r_max": {"mode": "fixed"}})


def test_config_hash_ignores_output_dir():
    a = ExperimentConfig.from_dict({"kind": "tail", "output_dir": "/tmp/a"})
    b = ExperimentConfig.from_dict({"kind": "tail", "output_dir": "/tmp/b"})
    c = ExperimentConfig.from_dict({"kind": "tail", "base_seed": 1})
    assert a.config_hash == b.config_hash != c.config_hash
    assert a.replace(base_seed=1).config_hash == c.config_hash


def test_rmax_policies():
    cfg = ExperimentConfig.from_dict({"kind": "tail"})
    sched = cfg.rmax_schedule(1000, 2)
    assert sched[0] == pytest.approx(math.sqrt(math.log(1000)))
    assert sched[1] / sched[0] == pytest.approx(1.25)
    fixed = cfg.replace(r_max={"mode": "fixed", "value": 0.7})
    assert fixed.rmax_schedule(1000, 2) == [0.7]
    formula = cfg.replace(r_max={"mode": "formula", "factor": 4.0})
    assert formula.rmax_schedule(1000, 2) == [pytest.approx(4 * math.sqrt(math.log(1000)))]
    assert cfg.rmax_schedule(1000, 2, absolute=True)[0] == 1.0
    assert parse_p("inf") == math.inf and parse_p(2) == 2.0


def test_worker_count(monkeypatch):
    assert worker_count() == 1
    monkeypatch.setenv("PERSLAW_WORKERS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    with pytest.raises(ValueError):
        worker_count(0)


def _square(x):
    if x == 3:
        raise SimplexBudgetExceeded(1e9, 10)
    if x == 4:
        raise RuntimeError("boom")
    return x * x


def test_run_tasks_order_and_errors():
    out = run_tasks(_square, [(i,) for i in range(6)], 1)
    assert out[:3] == [0, 1, 4] and out[5] == 25
    assert out[3]["error"]["type"] == "SimplexBudgetExceeded" and out[3]["error"]["budget"] == 10
    assert out[4]["error"]["type"] == "RuntimeError"
    assert run_tasks(_square, [(i,) for i in range(6)], 2) == out


@pytest.mark.parametrize("kind", sorted(SMALL))
def test_small_runs_complete(kind, tmp_path):
    rec = run_experiment(small(kind))
    assert rec.errors == []
    assert rec.checks and rec.checks["all_replicates_completed"]["passed"]
    written = rec.write(tmp_path)
    data = json.loads((tmp_path / "records.json").read_text())
    assert data["fingerprint"] == rec.fingerprint()
    assert data["config_hash"] == small(kind).config_hash
    assert all(p.exists() for p in written)
    assert any(p.suffix == ".svg" for p in written)


def test_budget_overflow_is_recorded(monkeypatch):
    monkeypatch.setenv("PERSLAW_SIMPLEX_BUDGET", "50")
    rec = run_experiment(small("convergence"))
    assert rec.errors and rec.errors[0]["type"] == "SimplexBudgetExceeded"
    assert not rec.checks["all_replicates_completed"]["passed"]


def test_determinism_across_workers():
    cfg = small("tail")
    a = run_experiment(cfg, 1)
    b = run_experiment(cfg, 2)
    assert a.fingerprint() == b.fingerprint()
    assert a.timing["workers"] == 1 and b.timing["workers"] == 2
    assert run_experiment(cfg.replace(base_seed=12)).fingerprint() != a.fingerprint()


def test_spacing_cdf():
    F = limit_spacing_cdf("uniform")
    assert F(np.array([1.0]))[0] == pytest.approx(1 - math.exp(-1))
    G_ = limit_spacing_cdf("ramp")
    u = np.array([0.0, 0.5, 2.0, 50.0])
    # 1 - int_0^1 k e^{-uk} dx with k = 0.5 + x, closed form below
    ref = 1 - np.array([1.0] + [((1 + 0.5 * t) * math.exp(-0.5 * t) - (1 + 1.5 * t) * math.exp(-1.5 * t)) / t ** 2
                                for t in u[1:]])
    assert np.allclose(G_(u), ref, atol=1e-12)


# stability bound


def _pair(rng, k=3):
    b = rng.random(k)
    D1 = PersistenceDiagram(1, b, b + rng.random(k) + 0.1)
    D2 = PersistenceDiagram(1, D1.births + rng.normal(0, 0.01, k), D1.deaths + rng.normal(0, 0.01, k))
    return D1, D2


def test_bound_terms_identical_diagrams(rng):
    D1, _ = _pair(rng)
    for p in (1.0, 2.0, math.inf):
        t = stability_bound(D1, D1, WeightSpec("power", 2.0), FeatureSpec("constant_one"), p, 1.0, 0.0)
        assert t.total == 0.0


def test_pers_sum_and_G():
    D = PersistenceDiagram.from_points([(0, 1), (0, 2)])
    E = PersistenceDiagram.from_points([(0, 3)])
    assert pers_sum(D, 0) == 2 and pers_sum(D, 2) == 5
    assert G(D, E, 2) == 9 and G(D, E, 0) == 2


@pytest.mark.parametrize("p", [2.0, 3.0, math.inf])
@pytest.mark.parametrize("a", [0.5, 1.0])
def test_bound_holds_for_scalar_features(rng, p, a):
    for _ in range(50):
        D1, D2 = _pair(rng)
        for w in (WeightSpec("power", 1.0), WeightSpec("power", 2.0), WeightSpec("arctan", 2.0, 1.0)):
            phi = FeatureSpec("constant_one")
            lhs = abs(float(linear_representation(D1, w, phi).values) - float(linear_representation(D2, w, phi).values))
            W = wasserstein_distance(D1, D2, p).cost
            assert lhs <= stability_bound(D1, D2, w, phi, p, a, W).total + 1e-9


def test_bound_with_euclidean_ground_fails_by_sqrt2():
    # one point moved along the anti-diagonal: persistence changes by sqrt(2) times the Euclidean shift
    delta = 1e-3
    D1 = PersistenceDiagram.from_points([(0.0, 1.0)], 1)
    D2 = PersistenceDiagram.from_points([(-delta, 1.0 + delta)], 1)
    w, phi = WeightSpec("power", 1.0), FeatureSpec("constant_one")
    lhs = abs(float(linear_representation(D1, w, phi).values) - float(linear_representation(D2, w, phi).values))
    for ground, ratio in (("euclidean", math.sqrt(2)), ("l1", 1.0)):
        W = wasserstein_distance(D1, D2, 1.0, ground).cost
        rhs = stability_bound(D1, D2, w, phi, 1.0, 1.0, W).total
        assert lhs / rhs == pytest.approx(ratio, rel=1e-9)


def test_bound_holds_with_l1_ground(rng):
    grid = ImageGrid((-0.5, 1.5), (0.0, 1.5), 10)
    for _ in range(60):
        D1, D2 = _pair(rng)
        for p in (1.0, 2.0, math.inf):
            W = wasserstein_distance(D1, D2, p, "l1").cost
            for w in (WeightSpec("power", 1.0), WeightSpec("arctan", 2.0, 1.0)):
                for phi in (FeatureSpec("constant_one"), FeatureSpec("gaussian_bump", bandwidth=0.1, grid=grid)):
                    v1 = np.asarray(linear_representation(D1, w, phi).values)
                    v2 = np.asarray(linear_representation(D2, w, phi).values)
                    lhs = float(np.max(np.abs(v1 - v2)))
                    for a in (0.5, 1.0):
                        assert lhs <= stability_bound(D1, D2, w, phi, p, a, W).total + 1e-9


def test_bound_rejects_bad_a():
    D = PersistenceDiagram.from_points([(0, 1)])
    with pytest.raises(ValueError):
        stability_bound(D, D, WeightSpec(), FeatureSpec(), 2.0, 1.5, 0.0)
