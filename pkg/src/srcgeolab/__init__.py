"""srcgeolab: numerical laboratory for Randers metrics and stationary spacetimes.

The package converts between Randers data and conformal standard
stationary product metrics, integrates geodesics on both sides, lifts and
projects curves through the lightlike correspondence, computes Morse
indices by independent methods, and probes the second-order regularity of
the path-space energy functional.
"""

__version__ = "0.1.0"

from .finsler import (
    ChartDomain,
    FinslerJet,
    OneFormField,
    RandersMetric,
    RiemannianField,
    energy,
    evaluate,
    jet,
    reverse,
    validate,
)
from .spacetime import (
    CausalClass,
    LorentzProduct,
    MetricMatrixField,
    SpacetimeVector,
    StationaryData,
    classify_causal,
    conformal_rescale,
    evaluate_metric,
    src_backward,
    src_forward,
)
from .trajectory import Trajectory
from .geodesic import (
    FinslerSpray,
    LorentzODE,
    euler_lagrange_residual,
    integrate_finsler_geodesic,
    integrate_lorentz_geodesic,
    lorentz_el_residual,
    reparametrize_constant_h_speed,
    shoot_geodesic,
)
from .lift import (
    AdmissibleVariation,
    LiftedPath,
    VariationField,
    lift_variation,
    lightlike_lift,
    project_to_base,
    uhlenbeck_action,
)
from .morse import (
    ConjugatePoint,
    DiscreteHessian,
    IndexReport,
    conformal_index_check,
    energy_hessian,
    find_conjugate_points,
    index_from_conjugate_points,
    linearized_flow,
    uhlenbeck_hessian_fd,
    verify_src_index,
)
from .regularity import (
    EpsilonFamily,
    PathGridH10,
    ResidualCurve,
    build_epsilon_family,
    energy_gateaux_hessian,
    energy_gradient,
    fit_scaling_exponent,
    frechet_residual,
    probe_metric,
    scan_residuals,
)
from .zoo import ZooCase, ZooEntry, ZooRegistry, build_case

__all__ = [
    "__version__",
    "ChartDomain",
    "RiemannianField",
    "OneFormField",
    "RandersMetric",
    "FinslerJet",
    "evaluate",
    "jet",
    "reverse",
    "validate",
    "energy",
    "StationaryData",
    "LorentzProduct",
    "MetricMatrixField",
    "SpacetimeVector",
    "CausalClass",
    "src_forward",
    "src_backward",
    "evaluate_metric",
    "classify_causal",
    "conformal_rescale",
    "Trajectory",
    "FinslerSpray",
    "LorentzODE",
    "integrate_finsler_geodesic",
    "integrate_lorentz_geodesic",
    "reparametrize_constant_h_speed",
    "shoot_geodesic",
    "euler_lagrange_residual",
    "lorentz_el_residual",
    "LiftedPath",
    "VariationField",
    "AdmissibleVariation",
    "lightlike_lift",
    "project_to_base",
    "lift_variation",
    "uhlenbeck_action",
    "ConjugatePoint",
    "IndexReport",
    "DiscreteHessian",
    "linearized_flow",
    "find_conjugate_points",
    "index_from_conjugate_points",
    "energy_hessian",
    "uhlenbeck_hessian_fd",
    "verify_src_index",
    "conformal_index_check",
    "PathGridH10",
    "EpsilonFamily",
    "ResidualCurve",
    "build_epsilon_family",
    "energy_gradient",
    "energy_gateaux_hessian",
    "frechet_residual",
    "scan_residuals",
    "fit_scaling_exponent",
    "probe_metric",
    "ZooEntry",
    "ZooCase",
    "ZooRegistry",
    "build_case",
]
