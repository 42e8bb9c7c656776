"""Spectral calculus and verification toolkit for -Delta + a/|x|^2 on R^d."""

from .errors import ConstructionError, ParameterError
from .grids import (
    QuadResult,
    RadialFunction,
    RadialGrid,
    default_grid,
    lp_norm,
    make_log_grid,
    omega,
    time_quadrature,
    weighted_lp_norm,
)
from .operators import (
    Interval,
    OperatorParams,
    SectorOrder,
    endpoint_coupling,
    equiv_ranges,
    hardy_range,
    liouville_apply,
    make_params,
    mikhlin_range,
    sector_order,
)

__all__ = [
    "ConstructionError",
    "ParameterError",
    "QuadResult",
    "RadialFunction",
    "RadialGrid",
    "default_grid",
    "lp_norm",
    "make_log_grid",
    "omega",
    "time_quadrature",
    "weighted_lp_norm",
    "Interval",
    "OperatorParams",
    "SectorOrder",
    "endpoint_coupling",
    "equiv_ranges",
    "hardy_range",
    "liouville_apply",
    "make_params",
    "mikhlin_range",
    "sector_order",
]
