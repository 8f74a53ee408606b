"""Central numeric defaults.

Every tolerance used by the library lives here so that scenario files can
override them in one place.  The values mirror the documented defaults in the
README.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # Taylor engine
    epsilon_div: float = 1e-12  # minimum |constant term| for div/sqrt/pow
    matrix_cond_bound: float = 1e12  # condition-number bound for series inverses

    # structure validation
    epsilon_zero_section: float = 1e-8  # hard zero-section guard on ||s||
    pos_def_min_eig: float = 1e-10  # smallest admissible eigenvalue of g
    structure_residual: float = 1e-10  # Euler / homogeneity / C.s residuals

    # dual-formula cross-checks
    spray_mismatch: float = 1e-8
    nlc_crosscheck: float = 1e-9
    berwald_crosscheck: float = 1e-8
    tension_crosscheck: float = 1e-8

    # maps
    sigma_min: float = 1e-8  # nondegeneracy threshold on singular values
    affine_declare: float = 1e-8  # sup |tau| below which a map counts as affine
    isometry_residual: float = 1e-10

    # curves
    ode_tol: float = 1e-8

    # jet cross-validation
    jet_rel_residual: float = 1e-7

    def with_overrides(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT_TOLERANCES = Tolerances()

# Default truncation order for base-manifold Taylor expansions.  The deepest
# chain (first derivatives of the Berwald table, i.e. the curvature tensors)
# consumes five orders of the squared-norm expansion; six keeps those first
# derivatives exact.
DEFAULT_ORDER = 6
