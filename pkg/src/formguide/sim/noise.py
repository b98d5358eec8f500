"""Surrogate navigation and pointing error models.

The navigation chain mimics a GNSS-based architecture: each satellite's
absolute mean elements are corrupted independently, relative states are
formed by differencing the corrupted absolutes (so common-mode error
largely cancels), and a separate relative-navigation noise is added on the
ROE directly.  Thrust-direction errors tilt the commanded vector by a
Gaussian cone half-angle about a random transverse axis.

Default magnitudes are meter-class absolute and centimeter-class relative,
the regime of carrier-phase differential GNSS; they are surrogates and
overridable per scenario.

Sigmas are expressed in meter-equivalents: an element perturbation d is
applied as d/a on angles and d on lengths, so one sigma unit moves the
satellite by roughly one meter.  All draws happen in a fixed order per
control cycle, which makes zero-sigma runs bit-identical to noiseless ones
while consuming the same random stream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..astro import QnsElements


@dataclass(frozen=True)
class NoiseModel:
    """Standard deviations of the surrogate error sources.

    abs_nav_sigma: per-element absolute-state noise, meter-equivalent (6,).
    rel_nav_sigma: per-component dimensional-ROE noise, meters (6,).
    pointing_sigma: thrust-direction cone half-angle, radians.
    """

    abs_nav_sigma: np.ndarray = field(default_factory=lambda: 1.5 * np.ones(6))
    rel_nav_sigma: np.ndarray = field(default_factory=lambda: 0.05 * np.ones(6))
    pointing_sigma: float = math.radians(1.0)
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "abs_nav_sigma", np.asarray(self.abs_nav_sigma, dtype=float)
        )
        object.__setattr__(
            self, "rel_nav_sigma", np.asarray(self.rel_nav_sigma, dtype=float)
        )
        if np.any(self.abs_nav_sigma < 0) or np.any(self.rel_nav_sigma < 0):
            raise ValueError("sigmas must be nonnegative")
        if self.pointing_sigma < 0:
            raise ValueError("pointing sigma must be nonnegative")

    @classmethod
    def zero(cls, seed: int = 0) -> "NoiseModel":
        return cls(np.zeros(6), np.zeros(6), 0.0, seed)

    def with_seed(self, seed: int) -> "NoiseModel":
        return replace(self, seed=seed)


class NoiseStream:
    """Seeded draw sequence for one closed-loop run."""

    def __init__(self, model: NoiseModel):
        self.model = model
        self.rng = np.random.default_rng(model.seed)

    def perturb_elements(self, el: QnsElements) -> QnsElements:
        """Absolute-state noise in meter-equivalent element units."""
        z = self.rng.standard_normal(6) * self.model.abs_nav_sigma
        a = el.a
        return QnsElements(
            a=el.a + z[0],
            theta=el.theta + z[1] / a,
            ex=el.ex + z[2] / a,
            ey=el.ey + z[3] / a,
            inc=el.inc + z[4] / a,
            raan=el.raan + z[5] / a,
            flavor=el.flavor,
        )

    def perturb_roe(self, y: np.ndarray) -> np.ndarray:
        z = self.rng.standard_normal(6) * self.model.rel_nav_sigma
        return np.asarray(y, dtype=float) + z

    def perturb_direction(self, u: np.ndarray) -> np.ndarray:
        """Tilt a thrust vector by a Gaussian cone angle; norm preserved."""
        phase = self.rng.uniform(0.0, 2.0 * math.pi)
        angle = self.rng.standard_normal() * self.model.pointing_sigma
        u = np.asarray(u, dtype=float)
        norm = np.linalg.norm(u)
        if norm == 0.0 or angle == 0.0:
            return u.copy()
        uhat = u / norm
        # orthonormal pair spanning the transverse plane
        helper = np.array([1.0, 0.0, 0.0])
        if abs(uhat[0]) > 0.9:
            helper = np.array([0.0, 1.0, 0.0])
        e1 = np.cross(uhat, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(uhat, e1)
        axis = math.cos(phase) * e1 + math.sin(phase) * e2
        # Rodrigues rotation of u about the transverse axis
        c, s = math.cos(angle), math.sin(angle)
        return u * c + np.cross(axis, u) * s + axis * np.dot(axis, u) * (1.0 - c)
