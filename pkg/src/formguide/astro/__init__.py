"""Orbital mechanics layer: element sets, J2 truth, linear ROE dynamics."""
from .constants import EARTH, Constants
from .elements import (
    CartesianState,
    DimRoe,
    QnsElements,
    RoeVector,
    cartesian_to_qns,
    dimensionalize,
    elements_from_roe,
    mean_motion,
    qns_to_cartesian,
    roe_from_elements,
    undimensionalize,
    wrap_angle,
)
from .linear import conv_psi, roe_to_rtn, rtn_map, stm_phi
from .meanosc import mean_to_osc, osc_to_mean, propagate_mean, secular_rates
from .propagation import (
    eci_to_rtn,
    j2_acceleration,
    propagate_span,
    propagate_truth,
    rtn_basis,
    specific_energy,
)

__all__ = [
    "EARTH",
    "Constants",
    "CartesianState",
    "DimRoe",
    "QnsElements",
    "RoeVector",
    "cartesian_to_qns",
    "conv_psi",
    "dimensionalize",
    "eci_to_rtn",
    "elements_from_roe",
    "j2_acceleration",
    "mean_motion",
    "mean_to_osc",
    "osc_to_mean",
    "propagate_mean",
    "propagate_span",
    "propagate_truth",
    "qns_to_cartesian",
    "roe_from_elements",
    "roe_to_rtn",
    "rtn_basis",
    "rtn_map",
    "secular_rates",
    "specific_energy",
    "stm_phi",
    "undimensionalize",
    "wrap_angle",
]
