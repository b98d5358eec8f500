"""Noise-free benchmark on the trailing-to-tetrahedron scenario.

Results are compared against the published reference controller's numbers,
which are stored constants here, never recomputed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..control import MpcConfig
from ..guidance import GuidanceConfig
from .closedloop import CENTRALIZED, RunMetrics, run_closed_loop
from .noise import NoiseModel
from .scenarios import ScenarioSpec, builtin_scenario

# Published reference-controller row: per-satellite final errors (m) and
# delta-v (m/s) on the tetrahedron scenario.
REFERENCE_MPC = {
    "final_errors": np.array([2.96, 4.46, 7.42, 3.39]),
    "final_error_mean": 4.56,
    "delta_v": np.array([0.09, 0.97, 0.91, 0.12]),
    "delta_v_total": 2.09,
}


def benchmark_scenario(scheme: str = "SHMPC") -> ScenarioSpec:
    """Tetrahedron scenario under the benchmark tuning: 0.1-orbit thrust
    arcs, tracking weight 100 I6 and control weight 1.1 I3."""
    base = builtin_scenario("reconfig3")
    guidance = GuidanceConfig(
        q_weight=100.0 * np.ones(6),
        r_weight=1.1 * np.ones(3),
    )
    return base.with_overrides(
        tf_arc=0.1,
        guidance=guidance,
        mpc=MpcConfig(mode=scheme),
    )


@dataclass
class BenchmarkRow:
    label: str
    final_errors: np.ndarray
    final_error_mean: float
    error_improvement_pct: float
    delta_v: np.ndarray
    delta_v_total: float
    delta_v_saved_pct: float

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "final_errors": np.round(self.final_errors, 4).tolist(),
            "final_error_mean": round(self.final_error_mean, 4),
            "error_improvement_pct": round(self.error_improvement_pct, 2),
            "delta_v": np.round(self.delta_v, 4).tolist(),
            "delta_v_total": round(self.delta_v_total, 4),
            "delta_v_saved_pct": round(self.delta_v_saved_pct, 2),
        }


def reference_row() -> BenchmarkRow:
    return BenchmarkRow(
        label="Ref. MPC",
        final_errors=REFERENCE_MPC["final_errors"],
        final_error_mean=REFERENCE_MPC["final_error_mean"],
        error_improvement_pct=0.0,
        delta_v=REFERENCE_MPC["delta_v"],
        delta_v_total=REFERENCE_MPC["delta_v_total"],
        delta_v_saved_pct=0.0,
    )


def row_from_metrics(label: str, metrics: RunMetrics) -> BenchmarkRow:
    ref_err = REFERENCE_MPC["final_error_mean"]
    ref_dv = REFERENCE_MPC["delta_v_total"]
    return BenchmarkRow(
        label=label,
        final_errors=metrics.final_errors,
        final_error_mean=metrics.final_error_mean,
        error_improvement_pct=100.0 * (1.0 - metrics.final_error_mean / ref_err),
        delta_v=metrics.delta_v,
        delta_v_total=metrics.delta_v_total,
        delta_v_saved_pct=100.0 * (1.0 - metrics.delta_v_total / ref_dv),
    )


def benchmark_report(
    modes: list[tuple[str, str]] | None = None,
) -> list[BenchmarkRow]:
    """Run the zero-noise benchmark for the requested (topology, scheme)
    pairs and tabulate them against the stored reference row."""
    if modes is None:
        modes = [(CENTRALIZED, "SHMPC"), (CENTRALIZED, "FHMPC")]
    rows = [reference_row()]
    for topology, scheme in modes:
        spec = benchmark_scenario(scheme)
        metrics = run_closed_loop(
            spec, NoiseModel.zero(), (topology, scheme), keep_log=False
        )
        label = f"{'Cent.' if topology == CENTRALIZED else 'Dist.'} {scheme}"
        rows.append(row_from_metrics(label, metrics))
    return rows
