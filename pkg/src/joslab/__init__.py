"""Numerical laboratory for the driven Josephson circle flow: rotation
numbers, Arnold tongues and their adjacency points, and the monodromy of the
associated complex linear system."""

from .bessel import BesselEval, bessel_j, bessel_j_series
from .flow import (
    IdentityCheck,
    LiftMap,
    Params,
    RotationResult,
    build_lift,
    is_identity_map,
    period_map,
    rotation_number,
)
from .monodromy import (
    CanonicalSolution,
    ConditionStar,
    LinearSystem,
    Monodromy,
    PoleCount,
    canonical_series,
    choose_seed_radius,
    circle_diagnostics,
    condition_star,
    continue_canonical,
    count_poles_unit_disk,
    mobius_apply,
    monodromy,
    riccati_rhs,
)
from .ode import (
    IntegratorConfig,
    IntegrationError,
    MaxStepsExceededError,
    OdeProblem,
    StepUnderflowError,
    circle_path,
    integrate,
    integrate_path,
    radial_path,
)
from .tongues import (
    Adjacency,
    LockingWitness,
    TongueSlice,
    boundary_at,
    find_adjacencies,
    locking_witness,
    width_function,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Params",
    "IntegratorConfig",
    "OdeProblem",
    "IntegrationError",
    "StepUnderflowError",
    "MaxStepsExceededError",
    "integrate",
    "integrate_path",
    "circle_path",
    "radial_path",
    "LiftMap",
    "RotationResult",
    "IdentityCheck",
    "period_map",
    "build_lift",
    "rotation_number",
    "is_identity_map",
    "LockingWitness",
    "TongueSlice",
    "Adjacency",
    "locking_witness",
    "boundary_at",
    "width_function",
    "find_adjacencies",
    "BesselEval",
    "bessel_j",
    "bessel_j_series",
    "LinearSystem",
    "Monodromy",
    "CanonicalSolution",
    "PoleCount",
    "ConditionStar",
    "riccati_rhs",
    "monodromy",
    "mobius_apply",
    "canonical_series",
    "choose_seed_radius",
    "continue_canonical",
    "circle_diagnostics",
    "count_poles_unit_disk",
    "condition_star",
]
