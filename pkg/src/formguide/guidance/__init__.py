"""Guidance layer: grids, problem transcriptions and SCP drivers."""
from .config import GuidanceConfig, TrackingRefs
from .grid import GridError, ManeuverGrid, build_grid
from .profile import GuidanceProfile, StageDiag, compute_delta_v, delta_v_of_controls
from .pruning import prune
from .scp import (
    StageInfeasible,
    min_node_distance,
    scp_centralized,
    scp_with_umin,
)
from .transcription import (
    DegenerateGuess,
    GridModel,
    GuidanceError,
    transcribe,
    transcribe_problem1,
    transcribe_problem2,
    transcribe_problem3,
    transcribe_problem4_soft,
)

__all__ = [
    "DegenerateGuess",
    "GridError",
    "GridModel",
    "GuidanceConfig",
    "GuidanceError",
    "GuidanceProfile",
    "ManeuverGrid",
    "StageDiag",
    "StageInfeasible",
    "TrackingRefs",
    "build_grid",
    "compute_delta_v",
    "delta_v_of_controls",
    "min_node_distance",
    "prune",
    "scp_centralized",
    "scp_with_umin",
    "transcribe",
    "transcribe_problem1",
    "transcribe_problem2",
    "transcribe_problem3",
    "transcribe_problem4_soft",
]
