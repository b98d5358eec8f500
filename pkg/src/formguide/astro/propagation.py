"""Nonlinear truth propagation: two-body + J2, fixed-step RK4.

Optionally applies a constant thrust acceleration commanded in the
satellite's own RTN frame, re-resolved into ECI at every integrator stage.
"""
from __future__ import annotations

import math

import numpy as np

from .constants import EARTH, Constants
from .elements import CartesianState

DEFAULT_STEP = 10.0  # s


def j2_acceleration(r: np.ndarray, const: Constants = EARTH) -> np.ndarray:
    """J2 perturbation acceleration in ECI (m/s^2)."""
    mu = const.mu_si
    re = const.re_si
    x, y, z = r
    rn2 = float(r @ r)
    rn = math.sqrt(rn2)
    zr2 = z * z / rn2
    k = -1.5 * const.j2 * mu * re**2 / rn**5
    return k * np.array(
        [x * (1.0 - 5.0 * zr2), y * (1.0 - 5.0 * zr2), z * (3.0 - 5.0 * zr2)]
    )


def rtn_basis(r: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rows are the R, T, N unit vectors expressed in ECI."""
    rhat = r / np.linalg.norm(r)
    h = np.cross(r, v)
    nhat = h / np.linalg.norm(h)
    that = np.cross(nhat, rhat)
    return np.vstack([rhat, that, nhat])


def eci_to_rtn(reference: CartesianState, r_eci: np.ndarray) -> np.ndarray:
    """Position of r_eci relative to the reference state, in its RTN frame."""
    basis = rtn_basis(reference.r, reference.v)
    return basis @ (np.asarray(r_eci) - reference.r)


def _accel(
    r: np.ndarray,
    v: np.ndarray,
    u_rtn: np.ndarray | None,
    with_j2: bool,
    const: Constants,
) -> np.ndarray:
    rn = np.linalg.norm(r)
    a = -const.mu_si / rn**3 * r
    if with_j2:
        a = a + j2_acceleration(r, const)
    if u_rtn is not None:
        a = a + rtn_basis(r, v).T @ u_rtn
    return a


def propagate_truth(
    state: CartesianState,
    t0: float,
    t1: float,
    step: float = DEFAULT_STEP,
    u_rtn: np.ndarray | None = None,
    with_j2: bool = True,
    const: Constants = EARTH,
) -> CartesianState:
    """Propagate an ECI state from t0 to t1 with fixed-step RK4.

    Args:
        state: Initial ECI Cartesian state.
        t0, t1: Epochs in seconds, t1 >= t0.
        step: RK4 step; must divide the interval (within 1e-9 s).
        u_rtn: Optional constant acceleration in the satellite RTN frame.
        with_j2: Include the J2 perturbation (pure two-body when False).

    Returns:
        State at t1; differs from input object even when t1 == t0.
    """
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    span = t1 - t0
    if span == 0.0:
        return CartesianState(state.r.copy(), state.v.copy(), state.frame)
    if step <= 0:
        raise ValueError("step must be positive")
    n_steps = round(span / step)
    if n_steps == 0 or abs(n_steps * step - span) > 1e-9:
        raise ValueError(
            f"step {step} s does not divide interval of {span} s "
            f"(residual {abs(n_steps * step - span):.3e} s)"
        )
    if u_rtn is not None:
        u_rtn = np.asarray(u_rtn, dtype=float)

    r = state.r.copy()
    v = state.v.copy()
    h = step
    for _ in range(n_steps):
        k1r = v
        k1v = _accel(r, v, u_rtn, with_j2, const)
        k2r = v + 0.5 * h * k1v
        k2v = _accel(r + 0.5 * h * k1r, k2r, u_rtn, with_j2, const)
        k3r = v + 0.5 * h * k2v
        k3v = _accel(r + 0.5 * h * k2r, k3r, u_rtn, with_j2, const)
        k4r = v + h * k3v
        k4v = _accel(r + h * k3r, k4r, u_rtn, with_j2, const)
        r = r + (h / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
        v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return CartesianState(r, v, state.frame)


def propagate_span(
    state: CartesianState,
    t0: float,
    t1: float,
    nominal_step: float = DEFAULT_STEP,
    **kwargs,
) -> CartesianState:
    """Propagate over an arbitrary span by snapping the step to divide it."""
    span = t1 - t0
    if span <= 0:
        return propagate_truth(state, t0, t1, nominal_step, **kwargs)
    n = max(1, round(span / nominal_step))
    return propagate_truth(state, t0, t1, span / n, **kwargs)


def specific_energy(state: CartesianState, const: Constants = EARTH) -> float:
    """Two-body specific orbital energy (m^2/s^2)."""
    return float(state.v @ state.v) / 2.0 - const.mu_si / float(
        np.linalg.norm(state.r)
    )
