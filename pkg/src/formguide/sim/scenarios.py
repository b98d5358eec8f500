"""Built-in reconfiguration scenarios and the scenario description type."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..astro import QnsElements
from ..control import MpcConfig
from ..guidance import GuidanceConfig


@dataclass(frozen=True)
class ScenarioSpec:
    """A reconfiguration task: chief orbit, per-deputy boundary states,
    maneuver duration, and the guidance/stepping parameters."""

    name: str
    chief_osc: QnsElements
    y0: np.ndarray  # (N, 6) dimensional ROE, m
    yf: np.ndarray  # (N, 6)
    duration_orbits: float
    tf_arc: float = 0.2  # thrust arc, orbits
    tn_arc: float = 100.0  # coast arc, s
    guidance: GuidanceConfig = GuidanceConfig()
    mpc: MpcConfig = MpcConfig()

    def __post_init__(self) -> None:
        object.__setattr__(self, "y0", np.atleast_2d(np.asarray(self.y0, float)))
        object.__setattr__(self, "yf", np.atleast_2d(np.asarray(self.yf, float)))
        if self.y0.shape != self.yf.shape or self.y0.shape[1] != 6:
            raise ValueError("y0/yf must both be (N, 6)")
        if self.y0.shape[0] < 1:
            raise ValueError("at least one deputy required")
        if self.duration_orbits <= 0:
            raise ValueError("duration must be positive")

    @property
    def n_deputies(self) -> int:
        return self.y0.shape[0]

    def with_overrides(self, **kwargs) -> "ScenarioSpec":
        return replace(self, **kwargs)


_CHIEF_LEO = QnsElements(
    a=6978e3,
    theta=math.radians(90.0),
    ex=1e-3,
    ey=0.0,
    inc=math.radians(97.87),
    raan=0.0,
    flavor="osculating",
)

# chief line lists the eccentricity-vector entries as "0 & 029";
# read as ex = 0, ey = 0.029
_CHIEF_TETRA = QnsElements(
    a=6780.678e3,
    theta=math.radians(90.0),
    ex=0.0,
    ey=0.029,
    inc=math.radians(97.0),
    raan=math.radians(30.0),
    flavor="osculating",
)


def builtin_scenario(scenario_id: str) -> ScenarioSpec:
    """The three stock reconfigurations.

    reconfig1: six deputies, multi-PCO to multi-cartwheel, 5 orbits.
    reconfig2: four deputies, multi-cartwheel to multi-helix, 5 orbits.
    reconfig3: four deputies, trailing to tetrahedron, 7.5 orbits.
    """
    if scenario_id == "reconfig1":
        y0 = np.array(
            [
                [0, 0, 0, -150, 300, 0],
                [0, -35.91, -129.90, -75, 150, -259.81],
                [0, -35.91, -129.90, 75, -150, -259.81],
                [0, 0, 0, 150, -300, 0],
                [0, 35.91, 129.90, 75, -150, 259.81],
                [0, 35.91, 129.90, -75, 150, 259.81],
            ],
            dtype=float,
        )
        yf = np.array(
            [
                [0, 0, -500, 0, 0, 0],
                [0, 0, -333.33, 0, 0, 0],
                [0, 0, -166.67, 0, 0, 0],
                [0, 0, 166.67, 0, 0, 0],
                [0, 0, 333.33, 0, 0, 0],
                [0, 0, 500, 0, 0, 0],
            ],
            dtype=float,
        )
        return ScenarioSpec("reconfig1", _CHIEF_LEO, y0, yf, duration_orbits=5.0)
    if scenario_id == "reconfig2":
        y0 = np.array(
            [
                [0, 0, -500, 0, 0, 0],
                [0, 0, -250, 0, 0, 0],
                [0, 0, 250, 0, 0, 0],
                [0, 0, 500, 0, 0, 0],
            ],
            dtype=float,
        )
        yf = np.array(
            [
                [0, 34.56, 0, -250, 0, -250],
                [0, 17.28, 0, -125, 0, -125],
                [0, -17.28, 0, 125, 0, 125],
                [0, -34.56, 0, 250, 0, 250],
            ],
            dtype=float,
        )
        return ScenarioSpec("reconfig2", _CHIEF_LEO, y0, yf, duration_orbits=5.0)
    if scenario_id == "reconfig3":
        y0 = np.array(
            [
                [0, 750, 0, 0, 0, 0],
                [0, 250, 0, 0, 0, 0],
                [0, -250, 0, 0, 0, 0],
                [0, -750, 0, 0, 0, 0],
            ],
            dtype=float,
        )
        yf = np.array(
            [
                [0, 400, 0, 0, 0, 0],
                [0, 100, 177, 177, 354, 354],
                [0, -100, -177, 177, -354, 354],
                [0, -400, 0, 0, 0, 0],
            ],
            dtype=float,
        )
        return ScenarioSpec("reconfig3", _CHIEF_TETRA, y0, yf, duration_orbits=7.5)
    raise KeyError(f"unknown scenario id: {scenario_id!r}")


def coplanar_to_pco(n_deputies: int, spacing: float = 200.0, radius: float = 500.0,
                    duration_orbits: float = 10.0) -> ScenarioSpec:
    """Scalability family: along-track string to a projected circular orbit.

    Deputies start spacing meters apart along-track and end on a PCO of the
    given radius, phased uniformly.
    """
    if n_deputies < 1:
        raise ValueError("need at least one deputy")
    offsets = (np.arange(n_deputies) - (n_deputies - 1) / 2.0) * spacing
    y0 = np.zeros((n_deputies, 6))
    y0[:, 1] = offsets
    yf = np.zeros((n_deputies, 6))
    for i in range(n_deputies):
        phase = 2.0 * math.pi * i / max(n_deputies, 1)
        # PCO of radius rho: |de| = rho/2, |di| = rho, vectors phased together
        yf[i, 2] = 0.5 * radius * math.cos(phase)
        yf[i, 3] = 0.5 * radius * math.sin(phase)
        yf[i, 4] = radius * math.cos(phase)
        yf[i, 5] = radius * math.sin(phase)
    return ScenarioSpec(
        f"coplanar_to_pco_{n_deputies}",
        _CHIEF_LEO,
        y0,
        yf,
        duration_orbits=duration_orbits,
    )
