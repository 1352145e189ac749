"""Discrete real Monge-Ampère equations with prescribed Newton body.

Convex functions on R^n are represented by node values and a compact convex
body of admissible slopes; everything else (measures, solvers, mixed volumes,
capacities) is built on the clipped Laguerre complex of that data.
"""
from . import capacity, convexfun, geometry, ma_measure, mixedvol, solver
from .capacity import CapacityReport, CompactRegion, capacity as relative_capacity, extremal_function
from .convexfun import (
    Obstacle,
    PLConvexFunction,
    box_grid,
    convex_envelope,
    evaluate,
    is_model,
    legendre,
    reference_function,
    reference_potential,
    rooftop,
    sample,
    singularity_envelope,
    support_function,
)
from .errors import *  # noqa: F401,F403
from .geometry import (
    ConvexBody,
    body_from_subgradients,
    box,
    enclosing_simplex_radius,
    minkowski_sum,
    support,
    unit_simplex,
    volume,
)
from .ma_measure import MAResult, full_mass_check, ma, subgradient_cell
from .mixedvol import (
    VolumePolynomial,
    brunn_minkowski_check,
    log_concavity_check,
    mixed_area_2d,
    mixed_volume,
    volume_polynomial,
)
from .solver import BoxDensity, DiscreteMeasure, SolveReport, solve_aubin_yau, solve_ma, uniform_bound_diagnostic

__version__ = "0.1.0"
