"""Average packet dropping probability and the full threshold search."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .calllevel import (
    BlockingProbabilities,
    CallState,
    StateSpace,
    SteadyStateDistribution,
    ThresholdPair,
    solve_call_level,
)
from .config import ScenarioConfig
from .packet import DropCache

# constraint names used in infeasibility_reasons
C_EMERGENCY = "L_b_e<=C_e"
C_GENERAL_IN = "L_b_gin<=C_gin"
C_ORDER = "L_b_gin<=L_b_gout"
C_DROP = "avg_drop<=drop_bound"


@dataclass(frozen=True)
class ThresholdEvaluation:
    thresholds: ThresholdPair
    blocking: BlockingProbabilities
    avg_drop: float
    feasible: bool
    infeasibility_reasons: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.feasible != (not self.infeasibility_reasons):
            raise ValueError("feasible must be True exactly when no constraint is violated")

    def feasible_without(self, *ignored: str) -> bool:
        return all(r in ignored for r in self.infeasibility_reasons)

    def to_dict(self) -> dict:
        return {
            "t_gin": self.thresholds.t_gin,
            "t_gout": self.thresholds.t_gout,
            "L_b_e": self.blocking.L_b_e,
            "L_b_gin": self.blocking.L_b_gin,
            "L_b_gout": self.blocking.L_b_gout,
            "avg_drop": self.avg_drop,
            "feasible": self.feasible,
            "infeasibility_reasons": list(self.infeasibility_reasons),
        }


@dataclass(frozen=True)
class OptimizationResult:
    optimal: ThresholdPair
    evaluations: tuple[ThresholdEvaluation, ...]
    fallback_used: bool
    optimal_evaluation: ThresholdEvaluation = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "optimal": {"t_gin": self.optimal.t_gin, "t_gout": self.optimal.t_gout},
            "fallback_used": self.fallback_used,
            "optimal_evaluation": self.optimal_evaluation.to_dict(),
            "evaluations": [e.to_dict() for e in self.evaluations],
        }


def average_drop(dist: SteadyStateDistribution, space: StateSpace,
                 drops: Mapping[CallState, float] | np.ndarray) -> float:
    """Stationary mean of the per-combination drop probability."""
    if isinstance(drops, np.ndarray):
        values = drops
        if values.shape != (len(space),):
            raise ValueError("drop vector does not match the state space")
    else:
        missing = [s for s in space.states if s not in drops and tuple(s) not in drops]
        if missing:
            raise ValueError(f"no drop probability for combination(s) {missing[:5]}")
        values = np.array([drops[s] if s in drops else drops[tuple(s)] for s in space.states])
    return float(dist.probabilities @ values)


def all_threshold_pairs(N: int) -> list[ThresholdPair]:
    """Every 0 <= t_gout <= t_gin <= N, ordered by t_gin then t_gout."""
    return [ThresholdPair(g, o) for g in range(N + 1) for o in range(g + 1)]


def _violations(b: BlockingProbabilities, avg: float, config: ScenarioConfig,
                enforce_drop: bool) -> tuple[str, ...]:
    qos = config.qos
    out = []
    if not b.L_b_e <= qos.blocking_bound_e:
        out.append(C_EMERGENCY)
    if not b.L_b_gin <= qos.gin_bound:
        out.append(C_GENERAL_IN)
    if not b.L_b_gin <= b.L_b_gout:
        out.append(C_ORDER)
    if enforce_drop and not avg <= qos.drop_bound:
        out.append(C_DROP)
    return tuple(out)


def evaluate_thresholds(t: ThresholdPair | Sequence[int], config: ScenarioConfig,
                        drop_cache: DropCache | None = None, formula: str = "indicator",
                        enforce_drop: bool = True) -> ThresholdEvaluation:
    if not isinstance(t, ThresholdPair):
        t = ThresholdPair(*t)
    t.check(config.N)
    cache = drop_cache if drop_cache is not None else DropCache()
    sol = solve_call_level(config, t, formula=formula)
    avg = average_drop(sol.distribution, sol.space, cache.table(sol.space.states, config))
    reasons = _violations(sol.blocking, avg, config, enforce_drop)
    return ThresholdEvaluation(t, sol.blocking, avg, not reasons, reasons)


def select_optimum(evaluations: Iterable[ThresholdEvaluation],
                   ignore: Sequence[str] = ()) -> tuple[ThresholdEvaluation | None, list]:
    """Feasible argmin of L_b_gout; ties go to larger t_gout, then larger t_gin."""
    evaluations = list(evaluations)
    feasible = [e for e in evaluations if e.feasible_without(*ignore)]
    if not feasible:
        return None, evaluations
    best = min(
        feasible,
        key=lambda e: (e.blocking.L_b_gout, -e.thresholds.t_gout, -e.thresholds.t_gin),
    )
    return best, evaluations


_worker_cache: DropCache | None = None


def _evaluate_chunk(args):
    global _worker_cache
    if _worker_cache is None:
        _worker_cache = DropCache()
    pairs, config, formula, enforce_drop = args
    return [evaluate_thresholds(t, config, _worker_cache, formula, enforce_drop) for t in pairs]


def evaluate_all(config: ScenarioConfig, drop_cache: DropCache | None = None,
                 formula: str = "indicator", enforce_drop: bool = True,
                 jobs: int = 1) -> tuple[ThresholdEvaluation, ...]:
    pairs = all_threshold_pairs(config.N)
    if jobs <= 1:
        cache = drop_cache if drop_cache is not None else DropCache()
        return tuple(evaluate_thresholds(t, config, cache, formula, enforce_drop) for t in pairs)
    chunks = [pairs[i::jobs] for i in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_evaluate_chunk, [(c, config, formula, enforce_drop) for c in chunks]))
    by_pair = {e.thresholds: e for part in parts for e in part}
    return tuple(by_pair[t] for t in pairs)


def result_from_evaluations(evaluations: Sequence[ThresholdEvaluation],
                            ignore: Sequence[str] = ()) -> OptimizationResult:
    """Pick the optimum (or the (0, 0) fallback) from a full evaluation table."""
    best, evaluations = select_optimum(evaluations, ignore)
    if best is None:
        fallback = ThresholdPair(0, 0)
        best = next(e for e in evaluations if e.thresholds == fallback)
        return OptimizationResult(fallback, tuple(evaluations), True, best)
    return OptimizationResult(best.thresholds, tuple(evaluations), False, best)


def optimize(config: ScenarioConfig, drop_cache: DropCache | None = None,
             formula: str = "indicator", jobs: int = 1) -> OptimizationResult:
    """Full search over threshold pairs; (0, 0) when nothing is feasible."""
    return result_from_evaluations(evaluate_all(config, drop_cache, formula, True, jobs))


def baseline_from_evaluations(evaluations: Sequence[ThresholdEvaluation], config: ScenarioConfig,
                              mode: str = "no-drop-constraint") -> OptimizationResult:
    """Conventional thresholds derived from an existing evaluation table."""
    if mode == "no-drop-constraint":
        return result_from_evaluations(evaluations, ignore=(C_DROP,))
    if mode == "fixed-open":
        t = ThresholdPair(config.N, config.N)
        ev = next(e for e in evaluations if e.thresholds == t)
        return OptimizationResult(t, tuple(evaluations), False, ev)
    raise ValueError(f"unknown baseline mode {mode!r}")


def conventional_baseline(config: ScenarioConfig, drop_cache: DropCache | None = None,
                          formula: str = "indicator", mode: str = "no-drop-constraint",
                          jobs: int = 1) -> ThresholdEvaluation:
    """Thresholds chosen only for connection quality (packet drops not bounded).

    ``no-drop-constraint`` repeats the search with the drop bound removed;
    ``fixed-open`` uses t = (N, N).  The returned record reports avg_drop but
    its feasibility ignores the drop bound.
    """
    if mode == "fixed-open":
        t = ThresholdPair(config.N, config.N)
        return evaluate_thresholds(t, config, drop_cache, formula, enforce_drop=False)
    if mode != "no-drop-constraint":
        raise ValueError(f"unknown baseline mode {mode!r}")
    evaluations = evaluate_all(config, drop_cache, formula, enforce_drop=False, jobs=jobs)
    return result_from_evaluations(evaluations).optimal_evaluation
