"""Guidance parameters shared by every problem transcription."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GuidanceConfig:
    """Problem parameters; defaults reproduce the nominal comparison setup.

    Attributes:
        u_min, u_max: Acceleration floor/ceiling per deputy (m/s^2).
        r_ca: Keep-out sphere radius around each satellite (m).
        ca_margin: Optional inflation of r_ca used when emitting
            avoidance rows (the keep-out metric itself stays at r_ca).
        p: Pruning factor (1.0 = 100%).
        q_weight: Diagonal of the 6x6 tracking weight Q.
        r_weight: Diagonal of the 3x3 control weight R (entries >= 1).
        q_umin, q_ca: Penalty weights on the min-acceleration and
            collision slack sums.
        upsilon_max: Cap on min-acceleration slacks (scaled units, m^2/s^2).
        beta_max: Cap on collision slacks (m).
        eps: SCP convergence threshold on node-wise state change (m).
        max_iter: SCP iteration cap per stage.
        ca_pass_cap: Serialized collision-resolution pass cap (None -> N+2).
    """

    u_min: float = 20e-6
    u_max: float = 35e-6
    r_ca: float = 100.0
    ca_margin: float = 0.0
    p: float = 1.0
    q_weight: np.ndarray = field(default_factory=lambda: np.ones(6))
    r_weight: np.ndarray = field(default_factory=lambda: np.ones(3))
    q_umin: float = 1e-2
    q_ca: float = 1.0
    upsilon_max: float = math.inf
    beta_max: float = 10.0
    eps: float = 1.0
    max_iter: int = 10
    ca_pass_cap: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "q_weight", np.asarray(self.q_weight, dtype=float))
        object.__setattr__(self, "r_weight", np.asarray(self.r_weight, dtype=float))
        if not (0.0 <= self.u_min <= self.u_max):
            raise ValueError("need 0 <= u_min <= u_max")
        if self.r_ca <= 0:
            raise ValueError("keep-out radius must be positive")
        if self.q_weight.shape != (6,) or np.any(self.q_weight < 0):
            raise ValueError("q_weight must be a nonnegative 6-diagonal")
        if self.r_weight.shape != (3,) or np.any(self.r_weight < 1.0):
            raise ValueError("r_weight diagonal entries must be >= 1")
        if self.q_umin <= 0 or self.q_ca <= 0:
            raise ValueError("slack penalty weights must be positive")
        if self.eps <= 0 or self.max_iter < 1:
            raise ValueError("bad SCP termination parameters")


@dataclass(frozen=True)
class TrackingRefs:
    """Reference states to track: node indices kbar and per-deputy ybar.

    ybar has shape (n_deputies, len(kbar), 6), in dimensional ROE meters.
    With kbar = [m+1] and ybar the target states this is the softened
    equivalent of the hard final-state constraint.
    """

    kbar: np.ndarray
    ybar: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "kbar", np.asarray(self.kbar, dtype=int))
        object.__setattr__(self, "ybar", np.asarray(self.ybar, dtype=float))
        if self.kbar.ndim != 1 or self.kbar.size == 0:
            raise ValueError("kbar must be a nonempty index vector")
        if self.ybar.ndim != 3 or self.ybar.shape[1:] != (self.kbar.size, 6):
            raise ValueError("ybar must have shape (n_deputies, len(kbar), 6)")

    @classmethod
    def final_state(cls, yf: np.ndarray, m: int) -> "TrackingRefs":
        yf = np.atleast_2d(np.asarray(yf, dtype=float))
        return cls(kbar=np.array([m + 1]), ybar=yf[:, None, :])
