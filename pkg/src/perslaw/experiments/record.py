"""Run records: deterministic results plus timing, written as JSON, CSV and SVG."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from .. import __version__
from . import svg


def plain(obj: Any) -> Any:
    """Recursively convert numpy scalars and arrays to JSON-ready Python objects."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def versions() -> Dict[str, str]:
    import numba
    import scipy

    return {"perslaw": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


def check(passed: bool, value=None, threshold=None, detail: str = "") -> Dict[str, Any]:
    return {"passed": bool(passed), "value": value, "threshold": threshold, "detail": detail}


@dataclass
class RunRecord:
    """Everything a run produced.

    ``timing`` (wall-clock and worker count) is the only part allowed to
    differ between reruns of the same configuration; :meth:`identity` and
    :meth:`fingerprint` leave it out. ``images`` hold large matrices that go
    to CSV/SVG files; the record keeps their digests.
    """

    kind: str
    config_hash: str
    config: Dict[str, Any]
    replicates: List[Dict[str, Any]] = field(default_factory=list)
    aggregates: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    checks: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    errors: List[Dict[str, Any]] = field(default_factory=list)
    plots: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    images: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    version: str = __version__
    versions: Dict[str, str] = field(default_factory=versions)
    timing: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def identity(self) -> Dict[str, Any]:
        return plain({
            "kind": self.kind, "config_hash": self.config_hash, "config": self.config,
            "replicates": self.replicates, "aggregates": self.aggregates, "checks": self.checks,
            "errors": self.errors, "plots": self.plots, "version": self.version,
            "versions": self.versions,
            "image_digests": {k: hashlib.sha256(np.ascontiguousarray(v, dtype=float).tobytes()).hexdigest()
                              for k, v in sorted(self.images.items())},
        })

    def fingerprint(self) -> str:
        text = json.dumps(self.identity(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def to_dict(self) -> Dict[str, Any]:
        out = self.identity()
        out["timing"] = plain(self.timing)
        out["fingerprint"] = self.fingerprint()
        out["passed"] = self.passed
        return out

    def write(self, out_dir) -> List[Path]:
        """records.json, one CSV per aggregate table, one SVG per plot or image."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "records.json"]
        written[0].write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))
        for name, rows in self.aggregates.items():
            path = out / f"{name}.csv"
            _write_rows(path, rows)
            written.append(path)
        for name, spec in self.plots.items():
            path = out / f"{name}.svg"
            svg.line_plot(path, **spec)
            written.append(path)
        for name, img in self.images.items():
            path = out / f"{name}.csv"
            np.savetxt(path, img, delimiter=",")
            written.append(path)
            path = out / f"{name}.svg"
            svg.heatmap(path, img, title=name)
            written.append(path)
        return written


def _write_rows(path: Path, rows: List[Dict[str, Any]]) -> None:
    keys: List[str] = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: plain(v) for k, v in r.items()})


def mean_stderr(values) -> tuple:
    v = np.asarray([x for x in values if x is not None and not math.isnan(x)], dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    if v.size == 1:
        return float(v[0]), math.nan
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
