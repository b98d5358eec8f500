"""Independent numerical oracles used by the test suite.

These deliberately avoid the package's analytic averaging expressions:
mean elements are extracted by their definition (one-orbit averages of the
osculating elements along a nonlinearly propagated trajectory), and truth
states are constructed by iterating until that definition is satisfied.
"""
from __future__ import annotations

import math

import numpy as np

from formguide.astro import (
    EARTH,
    CartesianState,
    DimRoe,
    QnsElements,
    cartesian_to_qns,
    dimensionalize,
    elements_from_roe,
    mean_to_osc,
    propagate_span,
    qns_to_cartesian,
    roe_from_elements,
    undimensionalize,
    wrap_angle,
)


def numerical_mean_elements(
    state: CartesianState, t: float, n_per_orbit: int = 160
) -> QnsElements:
    """Mean elements at epoch t from two consecutive one-orbit averages.

    Averaging one period kills every orbit-periodic term exactly and turns
    secular drifts into their midpoint value; extrapolating two successive
    window means back to t removes the half-period offset without reusing
    any analytic J2 expression.
    """
    a_osc = cartesian_to_qns(state).a
    t_orb = 2.0 * math.pi * math.sqrt(a_osc**3 / EARTH.mu_si)
    ts = np.linspace(t, t + 2.0 * t_orb, 2 * n_per_orbit + 1)
    cur = state
    prev = t
    rows = []
    for tk in ts:
        if tk > prev:
            cur = propagate_span(cur, prev, tk)
            prev = tk
        el = cartesian_to_qns(cur)
        rows.append([el.a, el.theta, el.ex, el.ey, el.inc, el.raan])
    arr = np.array(rows)
    arr[:, 1] = np.unwrap(arr[:, 1])
    arr[:, 5] = np.unwrap(arr[:, 5])

    def trap(block: np.ndarray) -> np.ndarray:
        w = np.ones(len(block))
        w[0] = w[-1] = 0.5
        return (w @ block) / w.sum()

    m1 = trap(arr[: n_per_orbit + 1])
    m2 = trap(arr[n_per_orbit:])
    m = 1.5 * m1 - 0.5 * m2
    return QnsElements(
        a=m[0], theta=wrap_angle(m[1]), ex=m[2], ey=m[3], inc=m[4],
        raan=wrap_angle(m[5]), flavor="mean",
    )


def state_with_mean(target_mean: QnsElements, iters: int = 4) -> CartesianState:
    """Cartesian state whose orbit-averaged elements equal target_mean."""
    guess = target_mean
    state = qns_to_cartesian(mean_to_osc(guess))
    for _ in range(iters):
        got = numerical_mean_elements(state, 0.0)
        dv = target_mean.vector - got.vector
        if abs(dv[0]) < 1e-5 and np.abs(dv[1:]).max() < 1e-12:
            break
        gv = guess.vector + dv
        guess = QnsElements(
            a=gv[0], theta=gv[1], ex=gv[2], ey=gv[3], inc=gv[4], raan=gv[5],
            flavor="mean",
        )
        state = qns_to_cartesian(mean_to_osc(guess))
    return state


def averaged_roe(
    chief_state: CartesianState,
    deputy_state: CartesianState,
    t: float,
    a_c: float,
) -> np.ndarray:
    """Dimensional ROE of a deputy from definition-averaged mean elements."""
    mc = numerical_mean_elements(chief_state, t)
    md = numerical_mean_elements(deputy_state, t)
    return dimensionalize(roe_from_elements(mc, md), a_c).vector


def deputy_state_for_roe(chief_mean: QnsElements, y: np.ndarray) -> CartesianState:
    """Truth state whose averaged ROE about the chief equals y exactly."""
    target = elements_from_roe(
        chief_mean, undimensionalize(DimRoe(np.asarray(y, float)), chief_mean.a)
    )
    return state_with_mean(target)
