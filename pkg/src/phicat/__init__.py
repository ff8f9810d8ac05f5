"""Numerical companion for [phi, e3]-minimal graphs and their catenary cylinders.

Submodules
----------
weights      weight functions phi, integrability and hypothesis checks
profile      the catenary profile ODE, half-widths and width tables
geometry     finite-difference geometry of height graphs
solver       Newton solver for the phi-minimal graph equation
experiments  verification procedures built on the above
"""

from .errors import (
    BoundarySupport,
    DomainError,
    DomainViolation,
    EmptyOverlap,
    GridTooSmall,
    HypothesisWarning,
    Inconclusive,
    LowConfidenceWarning,
    NoConvergence,
    NonFinite,
    NotMinimal,
    PhicatError,
    SlabViolation,
    StepFailure,
    StripViolation,
)
from .experiments import (
    UBAR_FAMILIES,
    decay_bound_check,
    eta_quotient_extremum_check,
    moving_plane_check,
    perturbed_cylinder_build,
    quotient_formula_check,
)
from .geometry import (
    GraphPatch,
    SurfaceFields,
    drift_laplacian,
    first_variation,
    grim_reaper_patch,
    identity_residuals,
    phi_minimal_residual,
    surface_fields,
    weighted_area,
)
from .profile import (
    IntegrationOptions,
    ProfileSolution,
    asymptotic_slope,
    first_integral_slope,
    half_width,
    integrate_profile,
    reflect,
    width_table,
)
from .solver import (
    BoundaryData,
    SolveReport,
    SolverOptions,
    make_boundary_from_profile,
    solve_graph_equation,
    symmetry_defect,
    uniqueness_experiment,
)
from .weights import (
    HypothesisReport,
    Integrability,
    WeightSpec,
    check_hypotheses,
    classify_integrability,
    eval_weight,
    integrability_certificate,
)

__version__ = "0.1.0"
