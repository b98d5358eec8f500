"""Earth gravity constants used throughout the astrodynamics layer.

The public dataclass keeps the conventional km-based values; SI accessors
are provided because all internal state (positions, semi-major axes) is
carried in meters.
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Constants:
    """Earth gravitational parameter, oblateness coefficient and radius.

    Attributes:
        mu: Gravitational parameter (km^3/s^2).
        j2: Second zonal harmonic coefficient (dimensionless).
        re: Equatorial radius (km).
    """

    mu: float = 398600.4418
    j2: float = 1.08262668e-3
    re: float = 6378.137

    def __post_init__(self) -> None:
        if not (self.mu > 0 and self.j2 > 0 and self.re > 0):
            raise ValueError("gravity constants must be strictly positive")

    @property
    def mu_si(self) -> float:
        """Gravitational parameter in m^3/s^2."""
        return self.mu * 1e9

    @property
    def re_si(self) -> float:
        """Equatorial radius in m."""
        return self.re * 1e3


EARTH = Constants()
