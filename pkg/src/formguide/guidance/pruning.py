"""Acceleration pruning: zero out the weakest thrust nodes.

When a deputy's mean commanded acceleration sits at or below 1.5x the
thruster floor, the smallest instances are forced to zero so the surviving
nodes can run hot enough to clear the floor.  At least two instances always
survive so an early adjustment can still be corrected later in the profile.
"""
from __future__ import annotations

import math

import numpy as np

from .config import GuidanceConfig
from .grid import ManeuverGrid


def prune(
    u_norms: np.ndarray, config: GuidanceConfig, grid: ManeuverGrid
) -> list[frozenset[int]]:
    """Select per-deputy forced-node index sets to zero out.

    Args:
        u_norms: Unscaled acceleration norms per deputy per forced node,
            shape (N, len(kf)), from a solve without the minimum-
            acceleration constraint.
        config: Supplies u_min and the pruning factor p.
        grid: Supplies the forced node indices.

    Returns:
        Per-deputy frozensets of grid node indices (subsets of kf).
    """
    u_norms = np.atleast_2d(np.asarray(u_norms, dtype=float))
    n_f = u_norms.shape[1]
    if n_f != len(grid.kf):
        raise ValueError("norm profile does not match the forced node count")
    out: list[frozenset[int]] = []
    trigger = 1.5 * config.u_min
    for i in range(u_norms.shape[0]):
        u_mean = float(u_norms[i].mean())
        if config.u_min <= 0.0 or u_mean > trigger:
            out.append(frozenset())
            continue
        # epsilon guards the floor against float dust at exact ratios
        n_i = math.floor(config.p * (1.0 - u_mean / trigger) * n_f + 1e-9)
        n_i = max(0, min(n_i, n_f - 2))
        order = np.argsort(u_norms[i], kind="stable")
        out.append(frozenset(int(grid.kf[f]) for f in order[:n_i]))
    return out
