"""Univariate B-spline knot removal with guaranteed coarsening errors.

The package computes exact local error indicators for removing a single knot,
the best local refit after a removal, and greedy coarsening drivers that keep
the accumulated error below a tolerance in the L2, L-infinity or H1 norm.  A
small Galerkin toolkit (L2 projection, adaptive refinement, a Backward Euler
heat solver) drives the numerical experiments.
"""

from .bspline import (
    KnotVector,
    Spline,
    antiderivative_spline,
    basis_values,
    cp_inf_norm,
    cp_norm,
    derivative_spline,
    eval_basis,
    eval_spline,
    eval_spline_derivative,
    greville,
    insert_knot,
    open_knot_vector,
    validate_knot_vector,
    xi_norm,
    xi_weights,
)
from .coarsen import (
    CoarsenReport,
    CoarsenStep,
    IndicatorCache,
    coarsen_h1,
    coarsen_l2,
    coarsen_linf,
    coarsen_to_budget,
    compute_all_indicators,
    update_indicators,
)
from .errors import SplineError
from .removal import (
    RemovalContext,
    best_local_l2,
    best_local_linf,
    build_removal_context,
    error_cp,
    error_linf,
    error_xi,
    indicator_D,
    jump_value,
    remove_knot,
)

__version__ = "0.1.0"

__all__ = [
    "antiderivative_spline",
    "basis_values",
    "best_local_l2",
    "best_local_linf",
    "build_removal_context",
    "coarsen_h1",
    "coarsen_l2",
    "coarsen_linf",
    "coarsen_to_budget",
    "CoarsenReport",
    "CoarsenStep",
    "compute_all_indicators",
    "cp_inf_norm",
    "cp_norm",
    "derivative_spline",
    "error_cp",
    "error_linf",
    "error_xi",
    "eval_basis",
    "eval_spline",
    "eval_spline_derivative",
    "greville",
    "indicator_D",
    "IndicatorCache",
    "insert_knot",
    "jump_value",
    "KnotVector",
    "open_knot_vector",
    "RemovalContext",
    "remove_knot",
    "Spline",
    "SplineError",
    "update_indicators",
    "validate_knot_vector",
    "xi_norm",
    "xi_weights",
]
