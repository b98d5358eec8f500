"""Linear relative dynamics: transition/convolution matrices and the RTN map.

The model propagates dimensional relative orbital elements under Keplerian
motion plus secular J2: the relative mean longitude drifts with the relative
semi-major axis, J2 rotates the relative eccentricity vector at the perigee
precession rate, and couples relative inclination into the node.  Control
enters through the near-circular Gauss variational equations integrated in
closed form over an interval of constant RTN acceleration, including the
within-interval drift coupling, which is the only secular term that matters
on sub-orbit arcs.

All matrices act on dimensional ROE (meters) with the scaled acceleration
convention u_scaled = a_chief * u.
"""
from __future__ import annotations

import math

import numpy as np

from .constants import EARTH, Constants
from .elements import QnsElements, mean_motion
from .meanosc import propagate_mean, secular_rates


def _j2_scale(chief: QnsElements, const: Constants) -> float:
    """Common J2 secular rate factor (3/4) n J2 (re/p)^2."""
    n = mean_motion(chief.a, const)
    eta2 = 1.0 - chief.ex**2 - chief.ey**2
    p = chief.a * eta2
    return 0.75 * n * const.j2 * (const.re_si / p) ** 2


def stm_phi(
    chief: QnsElements, t0: float, t1: float, const: Constants = EARTH
) -> np.ndarray:
    """State transition matrix for dimensional ROE from t0 to t1.

    The chief carries mean elements valid at t0; because a, e, i are
    secular-J2 invariants the matrix depends only on the interval length,
    which makes the semigroup property exact.
    """
    if chief.flavor != "mean":
        raise ValueError("chief elements must be mean")
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    tau = t1 - t0
    n = mean_motion(chief.a, const)
    ee = _j2_scale(chief, const)
    c = math.cos(chief.inc)
    s = math.sin(chief.inc)
    q1 = 3.0 * c * c - 1.0
    q2 = 5.0 * c * c - 1.0

    phi = np.eye(6)
    phi[1, 0] = -(1.5 * n + 7.0 * ee * q1) * tau
    phi[1, 4] = -14.0 * ee * c * s * tau
    phi[5, 0] = 7.0 * ee * c * s * tau
    phi[5, 4] = 2.0 * ee * s * s * tau
    rot = ee * q2 * tau
    cr, sr = math.cos(rot), math.sin(rot)
    phi[2, 2] = cr
    phi[2, 3] = -sr
    phi[3, 2] = sr
    phi[3, 3] = cr
    return phi


def conv_psi(
    chief: QnsElements, t0: float, t1: float, const: Constants = EARTH
) -> np.ndarray:
    """Convolution matrix mapping constant scaled RTN acceleration on
    [t0, t1) to the dimensional ROE increment at t1.

    Closed-form integral of the near-circular Gauss variational equations
    with the chief argument of latitude advancing at its secular rate.
    """
    if chief.flavor != "mean":
        raise ValueError("chief elements must be mean")
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    tau = t1 - t0
    n = mean_motion(chief.a, const)
    theta_dot, _, _ = secular_rates(chief, const)
    u0 = chief.theta
    u1 = u0 + theta_dot * tau
    c0, s0 = math.cos(u0), math.sin(u0)
    c1, s1 = math.cos(u1), math.sin(u1)
    ic = (s1 - s0) / theta_dot  # integral of cos(u) dt
    isn = (c0 - c1) / theta_dot  # integral of sin(u) dt

    psi = np.zeros((6, 3))
    psi[0, 1] = 2.0 * tau
    psi[1, 0] = -2.0 * tau
    psi[1, 1] = -1.5 * n * tau**2
    psi[2, 0] = isn
    psi[2, 1] = 2.0 * ic
    psi[3, 0] = -ic
    psi[3, 1] = 2.0 * isn
    psi[4, 2] = ic
    psi[5, 2] = isn
    return psi / (n * chief.a)


def rtn_map(chief: QnsElements, t: float, t_ref: float = 0.0,
            const: Constants = EARTH) -> np.ndarray:
    """3x6 matrix taking dimensional ROE to RTN position offsets (m).

    Args:
        chief: Mean chief elements valid at epoch t_ref.
        t: Epoch at which the map is evaluated.
        t_ref: Epoch of validity of the chief elements.
    """
    if chief.flavor != "mean":
        raise ValueError("chief elements must be mean")
    el = chief if t == t_ref else propagate_mean(chief, t - t_ref, const)
    u = el.theta
    cu, su = math.cos(u), math.sin(u)
    return np.array(
        [
            [1.0, 0.0, -cu, -su, 0.0, 0.0],
            [0.0, 1.0, 2.0 * su, -2.0 * cu, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, su, -cu],
        ]
    )


def roe_to_rtn(
    chief: QnsElements, t: float, y: np.ndarray, t_ref: float = 0.0,
    const: Constants = EARTH
) -> np.ndarray:
    """Relative RTN position (m) of a deputy described by dimensional ROE y."""
    return rtn_map(chief, t, t_ref, const) @ np.asarray(y, dtype=float)
