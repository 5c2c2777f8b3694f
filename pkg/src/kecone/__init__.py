"""Numerics for cohomogeneity-one Kahler-Einstein cone metrics.

The library solves the radial profile equation of the invariant metric,
derives and extremizes its curvature operator, computes the cone-parameter
map and the comparison with the pulled-back ball metric, reproduces the
collar gluing-and-perturbation mechanism in radial reduction, and carries the
very-strong-negativity tensor algebra.
"""

from .errors import *  # noqa: F401,F403
from .ke_profile import (  # noqa: F401
    ClaimReport,
    MetricProfile,
    ModelParams,
    einstein_rescaling,
    fit_decay_rate,
    profile_from_json_dict,
    solve_profile,
    verify_claims,
)
from .curvature_ops import (  # noqa: F401
    CurvatureProfile,
    PointCurvatureOperator,
    assemble_point_operator,
    ball_reference_operator,
    curvature_profile,
    extremize_sectional,
    holomorphic_sectional_range,
)
from .hyperbolic_ball import (  # noqa: F401
    CutoffSpec,
    ball_metric,
    cutoff,
    cutoff_derivative_bounds,
    distance_to_divisor,
    divisor_distance_oracle,
    geodesic_distance_oracle,
)
from .model_comparison import (  # noqa: F401
    ComparisonReport,
    DiskProfile,
    alpha_of_c,
    alpha_sweep,
    compare_with_ball,
    cone_angle_check,
    disk_profile,
    find_c_for_alpha,
)
from .gluing_lab import (  # noqa: F401
    GluedProfile,
    PerturbationReport,
    build_glued_profile,
    defect_decay,
    newton_resolve,
)
from .tensor_lab import (  # noqa: F401
    HermitianCurvature,
    RiemannTensor,
    bland_decomposition_tensor,
    constant_hsc_tensor,
    hermitian_from_form,
    hermitian_from_riemann,
    kulkarni_nomizu,
    oneill_submersion_correction,
    riemann_from_hermitian,
    vsn_test,
)

__version__ = "0.1.0"
