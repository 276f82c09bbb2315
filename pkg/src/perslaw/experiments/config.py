"""Experiment configuration: schema validation, defaults and hashing."""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import jsonschema

KINDS = ("convergence", "spacings_d1", "tail", "stability_audit", "rate_fit",
         "torus_images", "betti_convergence", "marginal_histograms")

# Kinds sampling a torus instead of the unit cube; their r_max is in absolute units.
TORUS_KINDS = ("rate_fit", "torus_images")

_COMMON = {
    "filtration": "rips",
    "degrees": [1],
    "dims": [2],
    "sizes": [250, 500, 1000, 2000],
    "alphas": [1.0],
    "M_grid": [0.0],
    "replicates": 20,
    "base_seed": 0,
    "r_max": {"mode": "adaptive", "initial": 1.0, "growth": 1.25, "max_attempts": 12},
    "process": "binomial",
    "density": "uniform",
    "tolerance": 0.10,
    "output_dir": None,
}

_KIND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "convergence": {"alphas": [2.0], "params": {"expected": None}},
    "spacings_d1": {"degrees": [0], "dims": [1], "sizes": [5000], "replicates": 10,
                    "alphas": [1.0], "tolerance": 0.05, "params": {"ks_threshold": 0.03}},
    "tail": {"sizes": [1000], "M_grid": [round(0.1 * i, 10) for i in range(41)],
             "params": {"min_count": 5, "r2_min": 0.9}},
    "stability_audit": {"filtration": "cech", "degrees": [0, 1], "sizes": [8], "replicates": 1,
                        "alphas": [1.0, 2.0],
                        "params": {"n_pairs": 200, "max_points": 8, "cloud_size": [3, 8],
                                   "etas": [0.01, 0.05], "ps": [1, 2, "inf"], "a_values": [0.5, 1.0],
                                   "weights": [{"family": "power", "alpha": 1.0},
                                               {"family": "power", "alpha": 2.0},
                                               {"family": "arctan", "alpha": 1.0, "B": 1.0},
                                               {"family": "arctan", "alpha": 2.0, "B": 1.0}],
                                   "features": ["constant_one", "gaussian_bump"],
                                   "grounds": ["euclidean"], "bandwidth": 0.05, "resolution": 12}},
    "rate_fit": {"filtration": "cech", "sizes": [250, 500, 1000, 2000], "alphas": [4.0],
                 "r_max": {"mode": "fixed", "value": 0.5},
                 "params": {"torus_R": 1.8, "torus_r": 1.0, "n_ref": 4000, "manifold_dim": 2,
                            "exponent_tol": 0.5}},
    "torus_images": {"sizes": [500, 2000], "alphas": [0.0, 1.0, 2.0, 100.0],
                "r_max": {"mode": "adaptive", "initial": 1.85, "growth": 1.1, "max_attempts": 6},
                "params": {"torus_R": 1.8, "torus_r": 1.0, "bandwidth": None, "resolution": 200,
                           "window": 3.0, "detect_ratio": 2.0, "min_detected": 18, "dominance": 10.0}},
    "betti_convergence": {"degrees": [0], "sizes": [500, 1000, 2000, 4000],
                          "params": {"betti_r": 0.5, "compare_processes": True}},
    "marginal_histograms": {"degrees": [0, 1], "sizes": [2000],
                            "params": {"bin_width": 0.05, "hist_max": 5.0, "max_bin_fraction": 0.2,
                                       "chi2_level": 0.01}},
}


def load_schema() -> dict:
    text = resources.files(__package__).joinpath("schema.json").read_text()
    return json.loads(text)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key == "params" and isinstance(value, dict):
            out.setdefault("params", {}).update(copy.deepcopy(value))
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description.

    ``r_max`` is a policy: ``fixed`` (one radius), ``formula``
    (``factor * (log n)**(1/d)``) or ``adaptive`` (start at
    ``initial * (log n)**(1/d)`` and multiply by ``growth`` until no requested
    degree has censored points). Radii are in rescaled units for cube
    experiments and absolute units for torus experiments, where the
    ``(log n)**(1/d)`` factor is dropped.
    """

    kind: str
    filtration: str
    degrees: List[int]
    dims: List[int]
    sizes: List[int]
    alphas: List[float]
    M_grid: List[float]
    replicates: int
    base_seed: int
    r_max: Dict[str, Any]
    process: str
    density: str
    tolerance: float
    output_dir: Optional[str] = None
    params: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        jsonschema.validate(data, load_schema())
        resolved = _merge(_merge(_COMMON, _KIND_DEFAULTS[data["kind"]]), data)
        if "r_max" in data:
            defaults = _merge(_COMMON, _KIND_DEFAULTS[data["kind"]])["r_max"]
            if defaults.get("mode") == data["r_max"]["mode"]:
                resolved["r_max"] = {**defaults, **data["r_max"]}
        resolved.setdefault("params", {})
        jsonschema.validate(resolved, load_schema())
        return cls(**resolved)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "filtration": self.filtration, "degrees": list(self.degrees),
            "dims": list(self.dims), "sizes": list(self.sizes), "alphas": list(self.alphas),
            "M_grid": list(self.M_grid), "replicates": self.replicates, "base_seed": self.base_seed,
            "r_max": dict(self.r_max), "process": self.process, "density": self.density,
            "tolerance": self.tolerance, "output_dir": self.output_dir, "params": dict(self.params),
        }

    def replace(self, **changes) -> "ExperimentConfig":
        data = self.to_dict()
        data.update(changes)
        return ExperimentConfig.from_dict(data)

    @property
    def config_hash(self) -> str:
        """sha256 of the canonical JSON of everything that affects results."""
        data = self.to_dict()
        data.pop("output_dir")
        text = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def param(self, name: str):
        return self.params[name]

    def rmax_schedule(self, n: int, d: int, absolute: bool = False) -> List[float]:
        """Radii to try in order for a cloud of intensity ``n`` in dimension ``d``."""
        pol = self.r_max
        scale = 1.0 if absolute else math.log(max(n, 2)) ** (1.0 / d)
        if pol["mode"] == "fixed":
            return [float(pol["value"])]
        if pol["mode"] == "formula":
            return [float(pol.get("factor", 4.0)) * scale]
        r0 = float(pol.get("initial", 1.0)) * scale
        g = float(pol.get("growth", 1.25))
        return [r0 * g ** i for i in range(int(pol.get("max_attempts", 12)))]


def parse_p(p) -> float:
    return math.inf if p == "inf" else float(p)
