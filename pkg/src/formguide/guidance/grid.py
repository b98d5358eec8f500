"""Thrust/coast time discretization of a reconfiguration maneuver.

A maneuver is an alternating ladder of thrust arcs (length set in orbits
of the chief) and coast arcs (length in seconds); node indices split into
the forced set (thrust-arc starts, even) and the natural set (coast-arc
starts, odd).  The number of interior nodes m is odd and the maneuver has
exactly (m+1)/2 control cycles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..astro import EARTH, Constants, QnsElements, mean_motion


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class ManeuverGrid:
    """Node epochs t[0..m+1] with forced/natural index sets."""

    t: np.ndarray
    kf: np.ndarray
    kn: np.ndarray
    m: int
    tf_arc: float  # thrust arc length, orbits
    tn_arc: float  # coast arc length, s
    period: float  # chief orbital period, s

    def __post_init__(self) -> None:
        if self.m % 2 == 0:
            raise GridError("m must be odd")
        if self.t.shape != (self.m + 2,):
            raise GridError("node vector must have m+2 entries")
        if np.any(np.diff(self.t) <= 0):
            raise GridError("node epochs must be strictly increasing")

    @property
    def n_nodes(self) -> int:
        return self.m + 2

    @property
    def n_cycles(self) -> int:
        return (self.m + 1) // 2

    def dt(self, k: int) -> float:
        return float(self.t[k + 1] - self.t[k])

    @property
    def dts(self) -> np.ndarray:
        return np.diff(self.t)

    def subgrid(self, start: int, stop: int | None = None) -> "ManeuverGrid":
        """Grid over nodes [start, stop] of this ladder (stop inclusive).

        `start` must be a forced node and the slice must contain a whole
        number of control cycles, i.e. stop - start must be odd.
        """
        stop = self.m + 1 if stop is None else stop
        if start % 2 != 0:
            raise GridError("subgrid must start on a forced node")
        if (stop - start) % 2 != 0 or stop <= start:
            raise GridError("subgrid must span whole control cycles")
        m_sub = stop - start - 1
        return ManeuverGrid(
            t=self.t[start : stop + 1].copy(),
            kf=np.arange(0, m_sub, 2),
            kn=np.arange(1, m_sub + 1, 2),
            m=m_sub,
            tf_arc=self.tf_arc,
            tn_arc=self.tn_arc,
            period=self.period,
        )

    def extended(self, extra_cycles: int) -> "ManeuverGrid":
        """Append control cycles past the final node at the nominal cadence."""
        if extra_cycles <= 0:
            return self
        tf_s = self.tf_arc * self.period
        nodes = list(self.t)
        for _ in range(extra_cycles):
            nodes.append(nodes[-1] + tf_s)
            nodes.append(nodes[-1] + self.tn_arc)
        m_new = self.m + 2 * extra_cycles
        return ManeuverGrid(
            t=np.array(nodes),
            kf=np.arange(0, m_new, 2),
            kn=np.arange(1, m_new + 1, 2),
            m=m_new,
            tf_arc=self.tf_arc,
            tn_arc=self.tn_arc,
            period=self.period,
        )


def build_grid(
    t0: float,
    tf: float,
    tf_arc: float,
    tn_arc: float,
    chief: QnsElements,
    const: Constants = EARTH,
    strict_tiling: bool = False,
) -> ManeuverGrid:
    """Build the alternating thrust/coast ladder over [t0, tf].

    Args:
        t0, tf: Maneuver start and end epochs (s).
        tf_arc: Thrust arc duration in chief orbits.
        tn_arc: Coast arc duration in seconds.
        chief: Chief mean elements (sets the orbit period).
        strict_tiling: When True, a maneuver span that is not a whole
            number of cycles is an error; otherwise the final coast arc
            absorbs the remainder.
    """
    if tf <= t0:
        raise GridError("tf must exceed t0")
    if tf_arc <= 0 or tn_arc <= 0:
        raise GridError("arc durations must be positive")
    period = 2.0 * math.pi / mean_motion(chief.a, const)
    tf_s = tf_arc * period
    cycle = tf_s + tn_arc
    span = tf - t0
    n_cycles = int(math.floor(span / cycle + 1e-12))
    if n_cycles < 1:
        raise GridError(
            f"maneuver span {span:.3f} s is shorter than one control cycle "
            f"({cycle:.3f} s)"
        )
    residual = span - n_cycles * cycle
    if strict_tiling and residual > 1e-9:
        raise GridError(
            f"{n_cycles} cycles of {cycle:.3f} s leave a residual of "
            f"{residual:.3f} s in [t0, tf]"
        )
    nodes = [t0]
    for _ in range(n_cycles):
        nodes.append(nodes[-1] + tf_s)
        nodes.append(nodes[-1] + tn_arc)
    nodes[-1] = tf  # final coast absorbs the non-tiling remainder
    m = 2 * n_cycles - 1
    return ManeuverGrid(
        t=np.array(nodes),
        kf=np.arange(0, m, 2),
        kn=np.arange(1, m + 1, 2),
        m=m,
        tf_arc=tf_arc,
        tn_arc=tn_arc,
        period=period,
    )
