"""Repeated-run campaigns with deterministic per-run seeding."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..control import FHMPC, ReferenceTrajectory, build_reference, padding_cycles
from ..guidance import scp_with_umin
from ..guidance.distributed import scp_distributed
from .closedloop import CENTRALIZED, DISTRIBUTED, RunMetrics, open_loop_profile, run_closed_loop
from .noise import NoiseModel
from .scenarios import ScenarioSpec


@dataclass
class AggregateMetrics:
    """Arithmetic means across runs plus the per-run records."""

    runs: int
    delta_v_total: float
    delta_v: np.ndarray
    final_error_max: float
    final_error_mean: float
    koz_intrusion_max: float
    any_unsafe: bool
    per_run: list[RunMetrics]

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "delta_v_total": self.delta_v_total,
            "delta_v": self.delta_v.tolist(),
            "final_error_max": self.final_error_max,
            "final_error_mean": self.final_error_mean,
            "koz_intrusion_max": self.koz_intrusion_max,
            "any_unsafe": self.any_unsafe,
        }


def run_seeds(master_seed: int, runs: int) -> list[int]:
    """Deterministic per-run seeds derived from one master seed."""
    ss = np.random.SeedSequence(master_seed)
    return [int(child.generate_state(1)[0]) for child in ss.spawn(runs)]


def _one_run(args) -> RunMetrics:
    spec, noise, mode, reference, keep_log = args
    return run_closed_loop(spec, noise, mode, reference=reference, keep_log=keep_log)


def _shared_reference(spec: ScenarioSpec, mode) -> ReferenceTrajectory | None:
    """FHMPC's one-time reference is noise-independent: build it once."""
    topology, scheme = mode
    if scheme != FHMPC:
        return None
    from ..guidance import build_grid
    from ..guidance.transcription import GridModel
    from ..astro import osc_to_mean
    import math

    chief = osc_to_mean(spec.chief_osc)
    period = 2.0 * math.pi * math.sqrt(chief.a**3 / 3.986004418e14)
    grid = build_grid(0.0, spec.duration_orbits * period, spec.tf_arc, spec.tn_arc, chief)
    model = GridModel(grid, chief)
    if topology == DISTRIBUTED:
        prof = scp_distributed(model, spec.guidance, spec.y0, yf=spec.yf)
    else:
        prof = scp_with_umin(model, spec.guidance, spec.y0, yf=spec.yf, soft=True)
    padded = GridModel(grid.extended(padding_cycles(spec.mpc)), chief)
    return build_reference(prof, padded, grid.m)


def run_monte_carlo(
    spec: ScenarioSpec,
    noise: NoiseModel,
    mode: tuple[str, str] = (CENTRALIZED, "SHMPC"),
    runs: int = 10,
    keep_logs: bool = False,
    max_workers: int | None = None,
) -> AggregateMetrics:
    """Run the closed loop `runs` times with seeds derived from noise.seed.

    Aggregates are arithmetic means.  Runs are independent; max_workers > 1
    executes them in parallel processes without changing the results.
    """
    if runs < 1:
        raise ValueError("need at least one run")
    seeds = run_seeds(noise.seed, runs)
    reference = _shared_reference(spec, mode)
    jobs = [
        (spec, noise.with_seed(s), mode, reference, keep_logs) for s in seeds
    ]
    if max_workers is not None and max_workers > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        results = [_one_run(j) for j in jobs]
    return AggregateMetrics(
        runs=runs,
        delta_v_total=float(np.mean([r.delta_v_total for r in results])),
        delta_v=np.mean([r.delta_v for r in results], axis=0),
        final_error_max=float(np.mean([r.final_error_max for r in results])),
        final_error_mean=float(np.mean([r.final_error_mean for r in results])),
        koz_intrusion_max=float(np.mean([r.koz_intrusion_max for r in results])),
        any_unsafe=any(r.unsafe_flagged for r in results),
        per_run=results,
    )
