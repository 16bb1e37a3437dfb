"""Threshold-based admission control for emergency and general VoIP sessions.

Call level: a three-class loss system with trunk-reservation thresholds.
Packet level: superposed two-phase MMPPs feeding an MMPP/M/1/K queue.
"""

from .calllevel import BlockingProbabilities, ThresholdPair, solve_call_level
from .config import ConfigError, ScenarioConfig, default_scenario, load_scenario
from .optimizer import OptimizationResult, ThresholdEvaluation, conventional_baseline, optimize
from .packet import DropCache, drop_probability_for_combination, source_stats
from .simulator import SimulationConfig, compare_to_theory, run_simulation

__all__ = [
    "BlockingProbabilities",
    "ConfigError",
    "DropCache",
    "OptimizationResult",
    "ScenarioConfig",
    "SimulationConfig",
    "ThresholdEvaluation",
    "ThresholdPair",
    "compare_to_theory",
    "conventional_baseline",
    "default_scenario",
    "drop_probability_for_combination",
    "load_scenario",
    "optimize",
    "run_simulation",
    "solve_call_level",
    "source_stats",
]
