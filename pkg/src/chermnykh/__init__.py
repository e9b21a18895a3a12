"""
Equilibria, linear stability, zero-velocity curves and trajectories of a
dust particle in the restricted three-body problem with radiation pressure,
Poynting-Robertson drag, an oblate secondary and a circumstellar belt.
"""

from .model import (
    DomainError,
    ModelInputs,
    ModelParams,
    PhaseState,
    SingularityError,
    derive_params,
    effective_potential,
    jacobi_constant,
    jacobi_rate,
    load_preset,
    rhs,
    static_gradient,
    sun_earth_inputs,
)
from .equilibria import ConvergenceError, EquilibriumPoint, find_all, find_family, refine, seed_points
from .stability import StabilityReport, classify, solve_quartic, stability_report, routh_boundary
from .dynamics import CollisionError, Trajectory, integrate, drift_report
from .zvc import classify_ovals, extract_contours, sample_grid, table1

__version__ = "0.1.0"

__all__ = [
    "CollisionError", "ConvergenceError", "DomainError", "EquilibriumPoint", "ModelInputs",
    "ModelParams", "PhaseState", "SingularityError", "StabilityReport", "Trajectory",
    "classify", "classify_ovals", "derive_params", "drift_report", "effective_potential",
    "extract_contours", "find_all", "find_family", "integrate", "jacobi_constant", "jacobi_rate",
    "load_preset", "refine", "rhs", "routh_boundary", "sample_grid", "seed_points",
    "solve_quartic", "stability_report", "static_gradient", "sun_earth_inputs", "table1",
]
