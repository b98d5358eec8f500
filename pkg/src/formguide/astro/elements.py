"""Absolute and relative orbit element sets and their exact conversions.

State representations:

* Cartesian position/velocity (ECI or RTN tagged).
* Quasi-non-singular elements (a, theta, ex, ey, inc, raan) where theta is
  the mean argument of latitude and (ex, ey) the eccentricity vector; the
  set stays regular for circular orbits.
* Relative orbital elements (ROE) between a deputy and the chief, plus the
  dimensional variant scaled by the chief semi-major axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import EARTH, Constants

Frame = str  # "ECI" | "RTN"
Flavor = str  # "mean" | "osculating"


def wrap_angle(x: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.fmod(x + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


def mean_motion(a: float, const: Constants = EARTH) -> float:
    """Two-body mean motion (rad/s) for a semi-major axis in meters."""
    return math.sqrt(const.mu_si / a**3)


@dataclass(frozen=True)
class CartesianState:
    """Position (m) and velocity (m/s) in a tagged frame."""

    r: np.ndarray
    v: np.ndarray
    frame: Frame = "ECI"

    def __post_init__(self) -> None:
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        if self.r.shape != (3,) or self.v.shape != (3,):
            raise ValueError("r and v must be 3-vectors")
        if not (np.all(np.isfinite(self.r)) and np.all(np.isfinite(self.v))):
            raise ValueError("non-finite state")
        if self.frame == "ECI" and np.linalg.norm(self.r) <= EARTH.re_si:
            raise ValueError("ECI position below Earth surface")

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.r, self.v])


@dataclass(frozen=True)
class QnsElements:
    """Quasi-non-singular orbital elements.

    Attributes:
        a: Semi-major axis (m).
        theta: Mean argument of latitude M + omega (rad).
        ex, ey: Eccentricity vector e*cos(omega), e*sin(omega).
        inc: Inclination (rad).
        raan: Right ascension of the ascending node (rad).
        flavor: "mean" or "osculating".
    """

    a: float
    theta: float
    ex: float
    ey: float
    inc: float
    raan: float
    flavor: Flavor = "mean"

    def __post_init__(self) -> None:
        if self.a <= 0:
            raise ValueError("semi-major axis must be positive")
        if self.ex**2 + self.ey**2 >= 1.0:
            raise ValueError("eccentricity must be below 1")
        if not (0.0 <= self.inc <= math.pi):
            raise ValueError("inclination outside [0, pi]")

    @property
    def ecc(self) -> float:
        return math.hypot(self.ex, self.ey)

    @property
    def argp(self) -> float:
        return math.atan2(self.ey, self.ex)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a, self.theta, self.ex, self.ey, self.inc, self.raan])

    def with_flavor(self, flavor: Flavor) -> "QnsElements":
        return replace(self, flavor=flavor)


@dataclass(frozen=True)
class RoeVector:
    """Dimensionless relative orbital elements of a deputy w.r.t. the chief."""

    da: float = 0.0
    dlambda: float = 0.0
    dex: float = 0.0
    dey: float = 0.0
    dix: float = 0.0
    diy: float = 0.0

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.vector)):
            raise ValueError("non-finite ROE")

    @property
    def vector(self) -> np.ndarray:
        return np.array(
            [self.da, self.dlambda, self.dex, self.dey, self.dix, self.diy]
        )

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "RoeVector":
        v = np.asarray(v, dtype=float)
        return cls(*v.tolist())


@dataclass(frozen=True)
class DimRoe:
    """Dimensional relative orbital elements: chief semi-major axis times ROE."""

    y: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self) -> None:
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if self.y.shape != (6,):
            raise ValueError("dimensional ROE must be a 6-vector")

    @property
    def vector(self) -> np.ndarray:
        return self.y


def roe_from_elements(chief: QnsElements, deputy: QnsElements) -> RoeVector:
    """Relative orbital elements of a deputy with respect to the chief.

    Both inputs must carry mean elements; angle differences are wrapped so
    that deputies within a fraction of an orbit of the chief are handled
    regardless of absolute angle branch.
    """
    if chief.flavor != "mean" or deputy.flavor != "mean":
        raise ValueError("ROE are defined on mean elements")
    dtheta = wrap_angle(deputy.theta - chief.theta)
    draan = wrap_angle(deputy.raan - chief.raan)
    return RoeVector(
        da=(deputy.a - chief.a) / chief.a,
        dlambda=dtheta + draan * math.cos(chief.inc),
        dex=deputy.ex - chief.ex,
        dey=deputy.ey - chief.ey,
        dix=deputy.inc - chief.inc,
        diy=draan * math.sin(chief.inc),
    )


def elements_from_roe(chief: QnsElements, roe: RoeVector) -> QnsElements:
    """Exact inverse of :func:`roe_from_elements` about the same chief."""
    if chief.flavor != "mean":
        raise ValueError("ROE are defined on mean elements")
    draan = roe.diy / math.sin(chief.inc)
    return QnsElements(
        a=chief.a * (1.0 + roe.da),
        theta=chief.theta + roe.dlambda - draan * math.cos(chief.inc),
        ex=chief.ex + roe.dex,
        ey=chief.ey + roe.dey,
        inc=chief.inc + roe.dix,
        raan=chief.raan + draan,
        flavor="mean",
    )


def dimensionalize(roe: RoeVector, a_c: float) -> DimRoe:
    """Scale ROE by the chief semi-major axis (m)."""
    if a_c <= 0:
        raise ValueError("chief semi-major axis must be positive")
    return DimRoe(a_c * roe.vector)


def undimensionalize(y: DimRoe, a_c: float) -> RoeVector:
    """Inverse of :func:`dimensionalize`."""
    if a_c <= 0:
        raise ValueError("chief semi-major axis must be positive")
    return RoeVector.from_vector(y.vector / a_c)


def solve_kepler(mean_anom: float, ecc: float, tol: float = 1e-14) -> float:
    """Eccentric anomaly from mean anomaly via Newton iteration."""
    if ecc >= 1.0:
        raise ValueError("only elliptic orbits supported")
    e_anom = mean_anom if ecc < 0.8 else math.pi
    for _ in range(64):
        f = e_anom - ecc * math.sin(e_anom) - mean_anom
        e_anom -= f / (1.0 - ecc * math.cos(e_anom))
        if abs(f) < tol:
            break
    return e_anom


def qns_to_cartesian(el: QnsElements, const: Constants = EARTH) -> CartesianState:
    """Osculating QNS elements to an ECI Cartesian state.

    The caller is responsible for the mean/osculating distinction; the
    Keplerian geometry applied here is exact for whatever flavor is given.
    """
    ecc = el.ecc
    argp = el.argp if ecc > 0 else 0.0
    mean_anom = el.theta - argp
    e_anom = solve_kepler(mean_anom, ecc)
    nu = 2.0 * math.atan2(
        math.sqrt(1.0 + ecc) * math.sin(e_anom / 2.0),
        math.sqrt(1.0 - ecc) * math.cos(e_anom / 2.0),
    )
    p = el.a * (1.0 - ecc**2)
    r = p / (1.0 + ecc * math.cos(nu))
    mu = const.mu_si

    pos_pf = np.array([r * math.cos(nu), r * math.sin(nu), 0.0])
    vel_pf = math.sqrt(mu / p) * np.array(
        [-math.sin(nu), ecc + math.cos(nu), 0.0]
    )

    co, so = math.cos(argp), math.sin(argp)
    cO, sO = math.cos(el.raan), math.sin(el.raan)
    ci, si = math.cos(el.inc), math.sin(el.inc)
    rot = np.array(
        [
            [cO * co - sO * so * ci, -cO * so - sO * co * ci, sO * si],
            [sO * co + cO * so * ci, -sO * so + cO * co * ci, -cO * si],
            [so * si, co * si, ci],
        ]
    )
    return CartesianState(rot @ pos_pf, rot @ vel_pf, frame="ECI")


def cartesian_to_qns(state: CartesianState, const: Constants = EARTH) -> QnsElements:
    """ECI Cartesian state to osculating QNS elements."""
    if state.frame != "ECI":
        raise ValueError("expected an ECI state")
    mu = const.mu_si
    r = state.r
    v = state.v
    rn = np.linalg.norm(r)
    h = np.cross(r, v)
    hn = np.linalg.norm(h)
    ecc_vec = np.cross(v, h) / mu - r / rn
    ecc = float(np.linalg.norm(ecc_vec))
    energy = np.dot(v, v) / 2.0 - mu / rn
    a = -mu / (2.0 * energy)
    inc = math.acos(np.clip(h[2] / hn, -1.0, 1.0))
    node = np.cross([0.0, 0.0, 1.0], h)
    nn = np.linalg.norm(node)
    if nn < 1e-12:  # equatorial: RAAN undefined, pin to zero
        node = np.array([1.0, 0.0, 0.0])
        nn = 1.0
    raan = math.atan2(node[1], node[0])

    # argument of latitude of the position, then back out the mean one
    cos_u = np.dot(node, r) / (nn * rn)
    u_true = math.acos(np.clip(cos_u, -1.0, 1.0))
    if r[2] < 0:
        u_true = 2.0 * math.pi - u_true
    if ecc > 1e-12:
        cos_nu = np.dot(ecc_vec, r) / (ecc * rn)
        nu = math.acos(np.clip(cos_nu, -1.0, 1.0))
        if np.dot(r, v) < 0:
            nu = 2.0 * math.pi - nu
        argp = u_true - nu
    else:
        nu = u_true
        argp = 0.0
    e_anom = 2.0 * math.atan2(
        math.sqrt(1.0 - ecc) * math.sin(nu / 2.0),
        math.sqrt(1.0 + ecc) * math.cos(nu / 2.0),
    )
    mean_anom = e_anom - ecc * math.sin(e_anom)
    theta = mean_anom + argp
    return QnsElements(
        a=float(a),
        theta=wrap_angle(theta),
        ex=ecc * math.cos(argp),
        ey=ecc * math.sin(argp),
        inc=float(inc),
        raan=wrap_angle(raan),
        flavor="osculating",
    )
