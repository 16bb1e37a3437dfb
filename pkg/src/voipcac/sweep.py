"""Parameter sweeps and threshold surfaces, emitted as plain tables."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .calllevel import ThresholdPair
from .config import ScenarioConfig
from .markov import SteadyStateError
from .optimizer import (
    baseline_from_evaluations,
    evaluate_all,
    evaluate_thresholds,
    result_from_evaluations,
)
from .packet import DropCache, MmppFitError

SWEEPABLE = ("rho_e", "rho_gin", "rho_gout", "C_gin", "t_gin", "t_gout", "K")

SWEEP_COLUMNS = (
    "parameter", "value", "t_gin", "t_gout", "L_b_e", "L_b_gin", "L_b_gout",
    "avg_drop", "fallback_used", "error",
)
BASELINE_COLUMNS = (
    "baseline_t_gin", "baseline_t_gout", "baseline_L_b_e", "baseline_L_b_gin",
    "baseline_L_b_gout", "baseline_avg_drop", "baseline_fallback_used",
)
SURFACE_COLUMNS = (
    "t_gin", "t_gout", "L_b_e", "L_b_gin", "L_b_gout", "avg_drop", "below_drop_bound", "feasible",
)
EVALUATION_COLUMNS = ("t_gin", "t_gout", "L_b_e", "L_b_gin", "L_b_gout", "avg_drop", "feasible")


@dataclass(frozen=True)
class SweepSpec:
    swept_parameter: str
    values: tuple
    base_scenario: ScenarioConfig
    outputs: tuple[str, ...] = ()
    baseline: str | None = None
    formula: str = "indicator"
    # the threshold held fixed while the other one is swept
    fixed_threshold: int | None = None

    def __post_init__(self) -> None:
        if self.swept_parameter not in SWEEPABLE:
            raise ValueError(f"cannot sweep {self.swept_parameter!r}; choose from {SWEEPABLE}")
        if len(self.values) == 0:
            raise ValueError("sweep needs at least one value")
        object.__setattr__(self, "values", tuple(self.values))
        for v in self.values:
            _check_value(self.swept_parameter, v, self.base_scenario)
        if self.baseline not in (None, "no-drop-constraint", "fixed-open"):
            raise ValueError(f"unknown baseline {self.baseline!r}")
        if self.swept_parameter in ("t_gin", "t_gout") and self.fixed_threshold is None:
            raise ValueError(f"sweeping {self.swept_parameter} needs fixed_threshold")


def _check_value(param: str, v, base: ScenarioConfig) -> None:
    if not isinstance(v, (int, float, np.integer, np.floating)) or not math.isfinite(v):
        raise ValueError(f"{param} value {v!r} is not a finite number")
    if param.startswith("rho") and v < 0:
        raise ValueError(f"{param} must be >= 0 (got {v})")
    if param == "C_gin" and not 0 <= v <= 1:
        raise ValueError(f"C_gin must lie in [0, 1] (got {v})")
    if param in ("t_gin", "t_gout") and not (float(v).is_integer() and 0 <= v <= base.N):
        raise ValueError(f"{param} must be an integer in [0, {base.N}] (got {v})")
    if param == "K" and not (float(v).is_integer() and v >= 1):
        raise ValueError(f"K must be an integer >= 1 (got {v})")


def scenario_for(spec: SweepSpec, value) -> ScenarioConfig:
    base = spec.base_scenario
    p = spec.swept_parameter
    if p.startswith("rho_"):
        return base.with_intensities(**{p: float(value)})
    if p == "C_gin":
        return replace(base, qos=replace(base.qos, blocking_bound_gin=float(value)))
    if p == "K":
        return replace(base, capacity=replace(base.capacity, queue_capacity=int(value)))
    return base


def _fill(row: dict, prefix: str, ev, fallback) -> None:
    row[f"{prefix}t_gin"] = ev.thresholds.t_gin
    row[f"{prefix}t_gout"] = ev.thresholds.t_gout
    row[f"{prefix}L_b_e"] = ev.blocking.L_b_e
    row[f"{prefix}L_b_gin"] = ev.blocking.L_b_gin
    row[f"{prefix}L_b_gout"] = ev.blocking.L_b_gout
    row[f"{prefix}avg_drop"] = ev.avg_drop
    row[f"{prefix}fallback_used"] = fallback


def sweep_row(spec: SweepSpec, value, drop_cache: DropCache | None = None) -> dict:
    """One sweep record; failures are captured in the ``error`` column."""
    cache = drop_cache if drop_cache is not None else DropCache()
    row = {k: None for k in SWEEP_COLUMNS}
    row.update(parameter=spec.swept_parameter, value=value, error="")
    if spec.baseline:
        row.update({k: None for k in BASELINE_COLUMNS})
    try:
        scenario = scenario_for(spec, value)
        p = spec.swept_parameter
        if p in ("t_gin", "t_gout"):
            other = spec.fixed_threshold
            t = ThresholdPair(int(value), other) if p == "t_gin" else ThresholdPair(other, int(value))
            ev = evaluate_thresholds(t, scenario, cache, spec.formula)
            _fill(row, "", ev, False)
            if spec.baseline:
                _fill(row, "baseline_", ev, False)
            return row
        evaluations = evaluate_all(scenario, cache, spec.formula)
        proposed = result_from_evaluations(evaluations)
        _fill(row, "", proposed.optimal_evaluation, proposed.fallback_used)
        if spec.baseline:
            base = baseline_from_evaluations(evaluations, scenario, spec.baseline)
            _fill(row, "baseline_", base.optimal_evaluation, base.fallback_used)
    except (ValueError, SteadyStateError, MmppFitError, ArithmeticError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


_worker_cache: DropCache | None = None


def _pool_row(args):
    global _worker_cache
    if _worker_cache is None:
        _worker_cache = DropCache()
    spec, value = args
    return sweep_row(spec, value, _worker_cache)


def run_sweep(spec: SweepSpec, jobs: int = 1, drop_cache: DropCache | None = None) -> list[dict]:
    """Rows in sweep order, whatever order the workers finish in."""
    if jobs <= 1:
        cache = drop_cache if drop_cache is not None else DropCache()
        return [sweep_row(spec, v, cache) for v in spec.values]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_pool_row, [(spec, v) for v in spec.values]))


def emit_threshold_surface(config: ScenarioConfig, drop_cache: DropCache | None = None,
                           formula: str = "indicator", jobs: int = 1) -> list[dict]:
    """avg_drop and feasibility for every admissible (t_gin, t_gout)."""
    rows = []
    for ev in evaluate_all(config, drop_cache, formula, enforce_drop=True, jobs=jobs):
        rows.append({
            "t_gin": ev.thresholds.t_gin,
            "t_gout": ev.thresholds.t_gout,
            "L_b_e": ev.blocking.L_b_e,
            "L_b_gin": ev.blocking.L_b_gin,
            "L_b_gout": ev.blocking.L_b_gout,
            "avg_drop": ev.avg_drop,
            "below_drop_bound": ev.avg_drop < config.qos.drop_bound,
            "feasible": ev.feasible,
        })
    return rows


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


def to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def sweep_columns(spec: SweepSpec) -> tuple[str, ...]:
    cols = SWEEP_COLUMNS + (BASELINE_COLUMNS if spec.baseline else ())
    if spec.outputs:
        keep = set(spec.outputs) | {"parameter", "value", "error"}
        cols = tuple(c for c in cols if c in keep)
    return cols
