"""Closed-loop simulation: noise surrogates, scenarios, campaigns, metrics."""
from .benchmark import (
    REFERENCE_MPC,
    BenchmarkRow,
    benchmark_report,
    benchmark_scenario,
    reference_row,
    row_from_metrics,
)
from .closedloop import (
    CENTRALIZED,
    DISTRIBUTED,
    LOG_COLUMNS,
    RunMetrics,
    open_loop_profile,
    run_closed_loop,
)
from .montecarlo import AggregateMetrics, run_monte_carlo, run_seeds
from .noise import NoiseModel, NoiseStream
from .scenarios import ScenarioSpec, builtin_scenario, coplanar_to_pco

__all__ = [
    "AggregateMetrics",
    "BenchmarkRow",
    "CENTRALIZED",
    "DISTRIBUTED",
    "LOG_COLUMNS",
    "NoiseModel",
    "NoiseStream",
    "REFERENCE_MPC",
    "RunMetrics",
    "ScenarioSpec",
    "benchmark_report",
    "benchmark_scenario",
    "builtin_scenario",
    "coplanar_to_pco",
    "open_loop_profile",
    "reference_row",
    "row_from_metrics",
    "run_closed_loop",
    "run_monte_carlo",
    "run_seeds",
]
