"""Weighted averages of relaxed projections for convex feasibility problems."""

from relaxproj.errors import InputError
from relaxproj.geometry import Ball, Box, HalfSpace, Hyperplane, Simplex, contains, distance, project
from relaxproj.operator import BetaVector, apply_q, coefficients, decompose, active_indices

__version__ = "0.1.0"

__all__ = [
    "InputError",
    "Ball",
    "Box",
    "HalfSpace",
    "Hyperplane",
    "Simplex",
    "contains",
    "distance",
    "project",
    "BetaVector",
    "apply_q",
    "coefficients",
    "decompose",
    "active_indices",
]
