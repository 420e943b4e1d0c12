"""Wasserstein distances, Shape distances (Wasserstein modulo the Euclidean
isometry group), geodesic diagnostics and shape tangent spaces for finitely
supported probability measures on R^n."""

from .errors import ShapeSpaceError
from .geodesic import (
    CurveSample,
    QuotientCoefficientReport,
    SwitchFunction,
    aligned_geodesic,
    branch_curve,
    constant_speed_check,
    geodesic_between,
    linear_mixing_curve,
    metric_derivative,
    mixing_curve,
    quotient_coefficients,
    rotation_ramp,
)
from .isometry import (
    IsoAlgebraElement,
    Isometry,
    compose,
    flow_pushforward,
    fundamental_field,
    group_exponential,
    inverse,
    killing_basis,
    random_isometry,
)
from .measure import (
    DiscreteMeasure,
    TestFunction,
    barycenter,
    consolidate,
    dirac,
    make_measure,
    pushforward,
    second_moment,
)
from .shapedist import (
    ShapeDistanceResult,
    ShapeSolverConfig,
    alternation_step,
    shape_distance,
    shape_distance_oracle_2d,
    translation_search_bound,
)
from .tangent import (
    DiscreteVectorField,
    OrbitSubspaceReport,
    continuity_residual,
    flow_norm_invariance,
    l1_in_time_norm,
    l2_inner,
    orbit_subspace,
    project_onto_orbit,
    representative_independence_check,
    shape_norm,
)
from .transport import (
    Coupling,
    TransportResult,
    displacement_interpolation,
    wasserstein_entropic,
    wasserstein_exact,
    wasserstein_oracle,
)

__version__ = "0.1.0"
