"""First-order J2 averaging: mean <-> osculating elements and secular rates.

The short-period corrections are first order in J2 and first order in
eccentricity, expressed directly in the quasi-non-singular set so the map
stays regular at zero eccentricity.  The linear-in-e terms matter for
relative work: two nearby satellites share the zeroth-order oscillation,
and what survives in their element difference is precisely the eccentricity
differential of the map.  Remaining errors are O(J2*e^2) and O(J2^2).

The osculating-to-mean direction inverts the analytic map by fixed-point
iteration, so the round trip closes to iteration tolerance.
"""
from __future__ import annotations

import math
from dataclasses import replace

from .constants import EARTH, Constants
from .elements import QnsElements, mean_motion, wrap_angle


def _short_period_deltas(mean: QnsElements, const: Constants) -> tuple[float, ...]:
    """Osculating-minus-mean deltas evaluated at mean elements."""
    kappa = 1.5 * const.j2 * (const.re_si / mean.a) ** 2
    u = mean.theta
    ex, ey = mean.ex, mean.ey
    s2 = math.sin(mean.inc) ** 2
    c = math.cos(mean.inc)
    s2i = math.sin(2.0 * mean.inc)
    c2i = math.cos(2.0 * mean.inc)
    cos_u, sin_u = math.cos(u), math.sin(u)
    cos_2u, sin_2u = math.cos(2 * u), math.sin(2 * u)
    cos_3u, sin_3u = math.cos(3 * u), math.sin(3 * u)
    cos_4u, sin_4u = math.cos(4 * u), math.sin(4 * u)

    d_a = mean.a * kappa * s2 * cos_2u
    d_theta = 0.5 * kappa * (2.5 * s2 - 1.0) * sin_2u
    d_ex = kappa * ((1.0 - 1.25 * s2) * cos_u + (7.0 / 12.0) * s2 * cos_3u)
    d_ey = kappa * ((1.0 - 1.75 * s2) * sin_u + (7.0 / 12.0) * s2 * sin_3u)
    d_inc = 0.25 * kappa * s2i * cos_2u
    d_raan = 0.5 * kappa * c * sin_2u

    # linear-in-eccentricity corrections (machine-derived from the exact
    # Gauss equations expanded to O(e), including the Kepler-rate feedback
    # of the oscillating semi-major axis on the mean-longitude rate)
    d_a += 0.25 * kappa * mean.a * (
        ex * ((8.0 - 14.0 * s2) * cos_u + 14.0 * s2 * cos_3u)
        + ey * ((8.0 - 10.0 * s2) * sin_u + 14.0 * s2 * sin_3u)
    )
    d_theta += (kappa / 48.0) * (
        ex * ((336.0 - 462.0 * s2) * sin_u + (154.0 * s2 - 56.0) * sin_3u)
        + ey * ((330.0 * s2 - 288.0) * cos_u + (56.0 - 154.0 * s2) * cos_3u)
    )
    d_ex += (kappa / 16.0) * (
        ex * ((20.0 * c2i + 4.0) * cos_2u + (17.0 - 17.0 * c2i) * cos_4u)
        + ey * ((12.0 * c2i + 20.0) * sin_2u + (17.0 - 17.0 * c2i) * sin_4u)
    )
    d_ey += (kappa / 16.0) * (
        ex * ((24.0 * c2i - 8.0) * sin_2u + (17.0 - 17.0 * c2i) * sin_4u)
        + ey * (-(16.0 * c2i + 8.0) * cos_2u + (17.0 * c2i - 17.0) * cos_4u)
    )
    d_inc += (kappa / 12.0) * s2i * (
        ex * (7.0 * cos_3u - 3.0 * cos_u) + ey * (3.0 * sin_u + 7.0 * sin_3u)
    )
    d_raan += (kappa / 6.0) * c * (
        ex * (7.0 * sin_3u - 21.0 * sin_u) + ey * (15.0 * cos_u - 7.0 * cos_3u)
    )
    return d_a, d_theta, d_ex, d_ey, d_inc, d_raan


def mean_to_osc(mean: QnsElements, const: Constants = EARTH) -> QnsElements:
    """Add first-order J2 short-period terms to mean elements."""
    if mean.flavor != "mean":
        raise ValueError("input must carry mean elements")
    d_a, d_theta, d_ex, d_ey, d_inc, d_raan = _short_period_deltas(mean, const)
    return QnsElements(
        a=mean.a + d_a,
        theta=mean.theta + d_theta,
        ex=mean.ex + d_ex,
        ey=mean.ey + d_ey,
        inc=mean.inc + d_inc,
        raan=mean.raan + d_raan,
        flavor="osculating",
    )


def osc_to_mean(
    osc: QnsElements, const: Constants = EARTH, tol: float = 1e-13
) -> QnsElements:
    """Remove first-order J2 short-period terms from osculating elements.

    Solves mean_to_osc(mean) == osc by fixed-point iteration; converges in
    a handful of steps because the correction is O(J2).
    """
    if osc.flavor != "osculating":
        raise ValueError("input must carry osculating elements")
    mean = osc.with_flavor("mean")
    for _ in range(20):
        d = _short_period_deltas(mean, const)
        new = QnsElements(
            a=osc.a - d[0],
            theta=osc.theta - d[1],
            ex=osc.ex - d[2],
            ey=osc.ey - d[3],
            inc=osc.inc - d[4],
            raan=osc.raan - d[5],
            flavor="mean",
        )
        shift = abs(new.a - mean.a) / osc.a + abs(new.theta - mean.theta)
        mean = new
        if shift < tol:
            break
    return mean


def secular_rates(mean: QnsElements, const: Constants = EARTH) -> tuple[float, float, float]:
    """J2 secular rates (theta_dot, raan_dot, argp_dot) of mean elements (rad/s)."""
    n = mean_motion(mean.a, const)
    e2 = mean.ex**2 + mean.ey**2
    eta = math.sqrt(1.0 - e2)
    p = mean.a * eta**2
    scale = 0.75 * n * const.j2 * (const.re_si / p) ** 2
    c2 = math.cos(mean.inc) ** 2
    raan_dot = -2.0 * scale * math.cos(mean.inc)
    argp_dot = scale * (5.0 * c2 - 1.0)
    m_dot = n + scale * eta * (3.0 * c2 - 1.0)
    return m_dot + argp_dot, raan_dot, argp_dot


def propagate_mean(
    mean: QnsElements, dt: float, const: Constants = EARTH
) -> QnsElements:
    """Advance mean elements by dt seconds under Keplerian + secular-J2 motion.

    a, e, i are constant; theta and raan drift linearly and the eccentricity
    vector rotates at the perigee precession rate.
    """
    if mean.flavor != "mean":
        raise ValueError("input must carry mean elements")
    theta_dot, raan_dot, argp_dot = secular_rates(mean, const)
    rot = argp_dot * dt
    cr, sr = math.cos(rot), math.sin(rot)
    return replace(
        mean,
        theta=mean.theta + theta_dot * dt,
        raan=wrap_angle(mean.raan + raan_dot * dt),
        ex=cr * mean.ex - sr * mean.ey,
        ey=sr * mean.ex + cr * mean.ey,
    )
