"""Configuration-driven experiments on random persistence diagrams."""
from .config import ExperimentConfig, KINDS, load_schema
from .pool import WORKERS_ENV, run_tasks, worker_count
from .record import RunRecord
from .runners import (RUNNERS, limit_spacing_cdf, run_betti_convergence, run_convergence,
                      run_experiment, run_torus_images, run_marginal_histograms, run_rate_fit,
                      run_spacings_d1, run_stability_audit, run_tail_experiment)
from .stability import BoundTerms, stability_bound

__all__ = [
    "ExperimentConfig", "KINDS", "load_schema", "WORKERS_ENV", "run_tasks", "worker_count",
    "RunRecord", "RUNNERS", "limit_spacing_cdf", "run_experiment", "run_convergence",
    "run_spacings_d1", "run_tail_experiment", "run_stability_audit", "run_rate_fit", "run_torus_images",
    "run_betti_convergence", "run_marginal_histograms", "BoundTerms", "stability_bound",
]
