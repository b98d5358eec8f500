"""Solved guidance trajectories and their bookkeeping."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import ManeuverGrid


@dataclass
class StageDiag:
    """Per-stage record of one pipeline segment."""

    stage: str
    status: str
    iterations: int
    termination: str
    cost: float
    max_upsilon: float
    max_beta: float
    n_vars: int
    n_constraints: int
    solve_time: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class GuidanceProfile:
    """Per-deputy state/control/slack trajectories over one grid.

    States are the exact linear-recursion rollout of the solved controls,
    so the dynamics constraint holds to machine precision by construction.
    """

    y: np.ndarray  # (N, n_nodes, 6) dimensional ROE
    u_bar: np.ndarray  # (N, n_forced, 3) scaled controls on forced nodes
    gamma: np.ndarray  # (N, n_forced)
    upsilon: np.ndarray  # (N, n_forced); zero where the slack does not exist
    beta: dict[tuple[int, int, int], float]
    w: float
    a_c: float
    diagnostics: list[StageDiag] = field(default_factory=list)
    collision_safe: bool = True

    @property
    def n_deputies(self) -> int:
        return self.y.shape[0]

    @property
    def max_upsilon(self) -> float:
        return float(self.upsilon.max()) if self.upsilon.size else 0.0

    @property
    def max_beta(self) -> float:
        return max(self.beta.values()) if self.beta else 0.0

    def u_full(self, grid: ManeuverGrid) -> np.ndarray:
        """Unscaled accelerations over all interval indices (N, m+1, 3)."""
        out = np.zeros((self.n_deputies, grid.m + 1, 3))
        for f, k in enumerate(grid.kf):
            out[:, int(k), :] = self.u_bar[:, f, :] / self.a_c
        return out

    def final_state_error(self, targets: np.ndarray) -> np.ndarray:
        """Per-deputy ||y_final - target||."""
        targets = np.atleast_2d(targets)
        return np.linalg.norm(self.y[:, -1, :] - targets, axis=1)

    def diagnostics_dict(self) -> dict:
        return {
            "stages": [d.to_dict() for d in self.diagnostics],
            "max_upsilon": self.max_upsilon,
            "max_beta": self.max_beta,
            "collision_safe": self.collision_safe,
            "w": self.w,
        }


def compute_delta_v(
    profile: GuidanceProfile, grid: ManeuverGrid
) -> tuple[float, np.ndarray]:
    """Delta-v of a solved profile: sum of dt * ||u|| over forced nodes.

    Returns:
        (total, per-deputy) in m/s.
    """
    dts = np.array([grid.dt(int(k)) for k in grid.kf])
    norms = np.linalg.norm(profile.u_bar, axis=2) / profile.a_c
    per = norms @ dts
    return float(per.sum()), per


def delta_v_of_controls(u: np.ndarray, dts: np.ndarray) -> float:
    """Delta-v of executed accelerations: sum_k dt_k ||u_k||."""
    return float(np.linalg.norm(np.atleast_2d(u), axis=1) @ np.asarray(dts))
