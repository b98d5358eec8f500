"""Closed-loop stepping policies over the guidance layer.

Two receding policies are provided.  The shrinking-horizon controller
re-optimizes from the current control cycle to the fixed end of the
maneuver and flies only the first cycle of the result.  The fixed-horizon
controller tracks a one-time reference solution over a constant number of
ladder nodes, padding past the maneuver end with zero-control propagation
so every horizon problem has the same size.

The acceleration demanded by either policy may fall below the thruster
floor because the guidance softening permits it; the saturation law maps
any demand into {0} U [u_min, u_max] while preserving direction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conic import SolverSettings
from .guidance import (
    GuidanceConfig,
    GuidanceProfile,
    TrackingRefs,
    scp_with_umin,
)
from .guidance.distributed import scp_distributed
from .guidance.transcription import GridModel

SHMPC = "SHMPC"
FHMPC = "FHMPC"


@dataclass(frozen=True)
class MpcConfig:
    """Stepping-policy parameters.

    horizon_steps is the fixed node count of an FHMPC horizon; it must be
    odd so a horizon holds a whole number of control cycles, and is
    ignored by SHMPC.  sampling_dt is the simulation measurement cadence,
    not the re-plan period (re-planning happens every control cycle).
    """

    mode: str = SHMPC
    horizon_steps: int = 21
    sampling_dt: float = 50.0
    alpha: float = 0.4

    def __post_init__(self) -> None:
        if self.mode not in (SHMPC, FHMPC):
            raise ValueError("mode must be SHMPC or FHMPC")
        if self.horizon_steps % 2 == 0 or self.horizon_steps < 3:
            raise ValueError("horizon_steps must be odd and at least 3")
        if not (0.0 <= self.alpha < 1.0):
            raise ValueError("alpha must sit in [0, 1)")
        if self.sampling_dt <= 0:
            raise ValueError("sampling_dt must be positive")


def saturate(u: np.ndarray, u_min: float, u_max: float, alpha: float) -> np.ndarray:
    """Four-branch thruster saturation.

    Demands at or below alpha*u_min are dropped to zero; demands between
    that deadband and the floor are raised to the floor; demands inside
    the feasible band pass through; anything above the ceiling is clipped
    to it.  Direction is preserved exactly on every non-zero branch.
    """
    if not (0.0 <= alpha < 1.0):
        raise ValueError("alpha must sit in [0, 1)")
    u = np.asarray(u, dtype=float)
    norm = float(np.linalg.norm(u))
    if norm <= alpha * u_min:
        return np.zeros(3)
    if norm <= u_min:
        return u * (u_min / norm)
    if norm <= u_max:
        return u.copy()
    return u * (u_max / norm)


def acceleration_to_command(u: np.ndarray) -> tuple[np.ndarray, float]:
    """Split an RTN acceleration into (unit direction, magnitude).

    The zero vector yields a null command: zero direction and magnitude.
    """
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("non-finite acceleration")
    mag = float(np.linalg.norm(u))
    if mag == 0.0:
        return np.zeros(3), 0.0
    return u / mag, mag


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Node reference states over the padded ladder for FHMPC tracking.

    states covers the maneuver nodes 0..m+1 plus the artificial nodes,
    which continue the trajectory with zero control from the final
    planned state.
    """

    states: np.ndarray  # (N, n_padded_nodes, 6)
    m: int  # original maneuver's interior node count

    def segment(self, start: int, count: int) -> np.ndarray:
        if start + count > self.states.shape[1]:
            raise ValueError("reference does not cover the requested horizon")
        return self.states[:, start : start + count, :]


def build_reference(
    profile: GuidanceProfile, padded_model: GridModel, m_original: int
) -> ReferenceTrajectory:
    """Extend a full-maneuver solution with zero-control artificial nodes."""
    n = profile.n_deputies
    n_pad = padded_model.grid.n_nodes
    states = np.zeros((n, n_pad, 6))
    states[:, : m_original + 2, :] = profile.y
    for k in range(m_original + 1, n_pad - 1):
        phi = padded_model.phis[k]
        for i in range(n):
            states[i, k + 1] = phi @ states[i, k]
    return ReferenceTrajectory(states=states, m=m_original)


def padding_cycles(mpc: MpcConfig) -> int:
    """Control cycles to append so the last horizon stays full-size."""
    return (mpc.horizon_steps - 1) // 2


def _first_cycle_controls(profile: GuidanceProfile, a_c: float) -> np.ndarray:
    return profile.u_bar[:, 0, :] / a_c


def _execution_consistent(
    solve_once, a_c: float, config: GuidanceConfig, exec_alpha: float | None
) -> tuple[np.ndarray, GuidanceProfile]:
    """Re-plan away commands the saturation law would distort.

    A first-cycle command inside (alpha*u_min, u_min) gets force-raised to
    the floor at execution.  For commands above half the floor, the
    injected excess is smaller than the trim being flown, so the error
    contracts and the boost is acceptable.  Below half the floor the boost
    overshoots by more than the trim itself, which feeds an expanding
    overshoot-correct limit cycle; those commands are re-planned with the
    first node constrained to zero, letting the optimizer choose between a
    full-floor burn (steering the excess with the free direction) and not
    flying at all.
    """
    forced: list[set[int]] = []
    u_cmd, prof = solve_once(None)
    if exec_alpha is None or config.u_min <= 0.0:
        return u_cmd, prof
    if prof.u_bar.shape[1] <= 2:
        # last cycles: an overshoot is a single bounded event while a
        # suppressed trim is a guaranteed miss, so fly what the plan asks
        return u_cmd, prof
    n = u_cmd.shape[0]
    forced = [set() for _ in range(n)]
    for _ in range(2):
        lo = exec_alpha * config.u_min * (1.0 + 1e-9)
        hi = 0.5 * config.u_min
        band = [i for i in range(n)
                if lo < float(np.linalg.norm(u_cmd[i])) <= hi and 0 not in forced[i]]
        if not band:
            break
        for i in band:
            forced[i].add(0)
        u_cmd, prof = solve_once([frozenset(f) for f in forced])
    return u_cmd, prof


def shmpc_step(
    k: int,
    nav_state: np.ndarray,
    model: GridModel,
    config: GuidanceConfig,
    yf: np.ndarray,
    distributed: bool = False,
    settings: SolverSettings = SolverSettings(),
    exec_alpha: float | None = None,
) -> tuple[np.ndarray, GuidanceProfile]:
    """One shrinking-horizon step from node k: re-solve to the end, return
    the accelerations (m/s^2, RTN) of the next control cycle only.

    exec_alpha, when given, is the saturation deadband parameter; first
    cycle commands the saturation would distort trigger a zero-constrained
    re-plan (see _execution_consistent).
    """
    if k % 2 != 0:
        raise ValueError("steps start on forced nodes (even k)")
    sub = model.submodel(k)
    nav_state = np.atleast_2d(nav_state)

    def solve_once(pre_pruned):
        if distributed:
            prof = scp_distributed(sub, config, nav_state, yf=yf,
                                   settings=settings, pre_pruned=pre_pruned)
        else:
            prof = scp_with_umin(sub, config, nav_state, yf=yf, soft=True,
                                 settings=settings, pre_pruned=pre_pruned)
        return _first_cycle_controls(prof, model.a_c), prof

    return _execution_consistent(solve_once, model.a_c, config, exec_alpha)


def fhmpc_step(
    k: int,
    nav_state: np.ndarray,
    ref: ReferenceTrajectory,
    padded_model: GridModel,
    config: GuidanceConfig,
    mpc: MpcConfig,
    distributed: bool = False,
    settings: SolverSettings = SolverSettings(),
    exec_alpha: float | None = None,
) -> tuple[np.ndarray, GuidanceProfile]:
    """One fixed-horizon step: track the reference over horizon_steps nodes."""
    if k % 2 != 0:
        raise ValueError("steps start on forced nodes (even k)")
    n_h = mpc.horizon_steps
    sub = padded_model.submodel(k, k + n_h - 1)
    nav_state = np.atleast_2d(nav_state)
    refs = TrackingRefs(
        kbar=np.arange(n_h),
        ybar=ref.segment(k, n_h),
    )

    def solve_once(pre_pruned):
        if distributed:
            prof = scp_distributed(sub, config, nav_state, refs=refs,
                                   settings=settings, pre_pruned=pre_pruned)
        else:
            prof = scp_with_umin(sub, config, nav_state, refs=refs, soft=True,
                                 settings=settings, pre_pruned=pre_pruned)
        return _first_cycle_controls(prof, padded_model.a_c), prof

    return _execution_consistent(solve_once, padded_model.a_c, config, exec_alpha)
