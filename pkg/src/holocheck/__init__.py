"""Chartwise Riemannian geometry engine and verification checklist.

The package certifies, numerically and mechanically, the geometry of a
closed 3-manifold built as a mapping torus over T^2 x R_+: a warped chart
metric whose Levi-Civita connection descends to a nonflat, reducible,
locally metric connection that preserves a conformal structure while its
holonomy contains a strict similarity, so it is not the Levi-Civita
connection of any global metric.
"""

from .tensor_core import (
    ChartDomainError,
    ChartPoint,
    ChristoffelAtPoint,
    CurvatureAtPoint,
    DegeneratePlaneError,
    MetricError,
    MetricField,
    TangentVector,
    Z_FLOOR,
    christoffel_at,
    conformal_deviation_at,
    covariant_metric_derivative_at,
    euclidean_metric,
    metric_at,
    metric_partials_at,
    riemann_at,
    sectional_curvature,
    sectional_curvature_at,
    warped_metric,
)
from .transport import (
    BOUNDARY_ESCAPE,
    COMPLETED,
    STEP_LIMIT,
    CoordinateLine,
    CurveError,
    CurveSpec,
    IntegrationError,
    IntegratorConfig,
    ParametricSegment,
    StraightSegment,
    Termination,
    Trajectory,
    TrajectorySample,
    completeness_probe,
    coordinate_rectangle,
    curvature_via_loop,
    geodesic_energy_drift,
    integrate_geodesic,
    integrate_geodesic_coords,
    parallel_transport,
    trajectory_to_csv,
    transport_frame_trace,
    transport_matrix,
)
from .quotient import (
    EigenBasis,
    HolonomyElement,
    LiftEscapeError,
    LoopClass,
    SingularMatrixError,
    ToralMatrix,
    ToralMatrixError,
    classify_holonomy,
    deck_apply,
    deck_differential,
    eigen_basis,
    holonomy_element,
    holonomy_of_loop,
    pullback_metric_residual,
    quotient_conformal_metric,
    reduce_to_fundamental_domain,
    validate_toral_matrix,
)
from .foliation import (
    CheckItem,
    FoliationReport,
    LeafModel,
    gaussian_curvature,
    halfplane_leaf,
    induced_halfplane_metric,
    induced_line_metric,
    leaf_first_check,
    leaf_second_check,
    line_leaf,
    product_split_check,
)
from .report import CheckResult, VerificationReport, emit_report
from .checklist import ChecklistConfig, ConfigError, emit_traces, run_checklist

__version__ = "0.1.0"
