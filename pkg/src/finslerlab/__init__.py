"""finslerlab: numerical Finsler geometry workbench.

Evaluates, at user-supplied points, the fundamental and Cartan tensors,
sprays, nonlinear and Berwald connections, autoparallel curves, affine-map
residuals, tension fields, and the jet-space d-torsion/d-curvature blocks of
first-order jet geometry, cross-validating closed forms against the defining
general formulas.
"""

from .backend import BACKEND
from .config import DEFAULT_TOLERANCES, Tolerances
from .connection import base_geometry
from .curves import CurveState, GeodesicTrace, energy, integrate_autoparallel
from .finsler import (
    BasePoint,
    FinslerStructure,
    euclidean,
    from_expression,
    locally_minkowski,
    randers,
    riemannian,
    round_sphere,
    validate_structure,
)
from .jetspace import JetPoint, cross_validate, prolong_map, sample_jet_points
from .maps import (
    SmoothMap,
    affine_residual,
    identity_map,
    isometry_check,
    smooth_map,
    tension_field,
)

__version__ = "0.1.0"
__all__ = [
    "BACKEND",
    "BasePoint",
    "CurveState",
    "DEFAULT_TOLERANCES",
    "FinslerStructure",
    "GeodesicTrace",
    "JetPoint",
    "SmoothMap",
    "Tolerances",
    "__version__",
    "affine_residual",
    "base_geometry",
    "cross_validate",
    "energy",
    "euclidean",
    "from_expression",
    "identity_map",
    "integrate_autoparallel",
    "isometry_check",
    "locally_minkowski",
    "prolong_map",
    "randers",
    "riemannian",
    "round_sphere",
    "sample_jet_points",
    "smooth_map",
    "tension_field",
    "validate_structure",
]
