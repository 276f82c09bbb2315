"""Replicate execution on a bounded process pool.

Results are returned in task order whatever the worker count, so
aggregation never depends on scheduling.
"""
from __future__ import annotations

import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Optional, Sequence

from ..filtration import SimplexBudgetExceeded
from ..persistence import CensoredPointsError

WORKERS_ENV = "PERSLAW_WORKERS"


def worker_count(workers: Optional[int] = None) -> int:
    """Explicit value, else the ``PERSLAW_WORKERS`` environment variable, else 1."""
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers < 1:
        raise ValueError("worker count must be at least 1")
    return int(workers)


def _guarded(fn: Callable, args: tuple) -> Any:
    """Run one replicate; resource and censoring failures become structured errors."""
    try:
        return fn(*args)
    except SimplexBudgetExceeded as exc:
        return {"error": {"type": "SimplexBudgetExceeded", "message": str(exc),
                          "estimate": float(exc.estimate), "budget": int(exc.budget)}}
    except CensoredPointsError as exc:
        return {"error": {"type": "CensoredPointsError", "message": str(exc)}}
    except Exception as exc:  # keep the run alive; the record shows what failed
        return {"error": {"type": type(exc).__name__, "message": str(exc),
                          "traceback": traceback.format_exc(limit=3)}}


def _call(packed):
    fn, args = packed
    return _guarded(fn, args)


def run_tasks(fn: Callable, tasks: Sequence[tuple], workers: Optional[int] = None) -> List[Any]:
    """``[fn(*t) for t in tasks]`` with per-task error capture, possibly in parallel."""
    workers = worker_count(workers)
    if workers == 1 or len(tasks) <= 1:
        return [_guarded(fn, t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as ex:
        return list(ex.map(_call, [(fn, t) for t in tasks], chunksize=1))
