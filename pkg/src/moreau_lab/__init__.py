"""Exact Moreau envelope calculus for piecewise linear-quadratic convex functions."""

from .analysis import (
    annulus_gap,
    coercivity_test,
    em_openness_radius,
    epi_convergence_probe,
    relate_modulus_envelope,
    strong_convexity_report,
    strong_minimizer_certificate,
    unrestricted_gap,
)
from .metric import (
    MetricEstimate,
    aw_distance,
    ball_sup_norm,
    ball_sup_norm_oracle,
    conjugation_isometry_residual,
    envelope_distance,
    truncation_level,
)
from .moreau import (
    ProxBudgetExhausted,
    ProxSolveReport,
    envelope_at,
    envelope_gradient,
    envelope_plq,
    moreau_decomposition_residual,
    prox_inverse,
    prox_oracle,
    prox_plq,
    proximal_average,
)
from .oracle import OracleConvexFunction
from .plq import PLQFunction, NotConvexError, add_quadratic, check_convexity, conjugate, evaluate, minimize
from .pwl import MonotonePiecewiseLinearMap
from .strongify import meagre_family_member, strongify, verify_mvt_bound

__version__ = "0.1.0"

__all__ = [
    "PLQFunction",
    "MonotonePiecewiseLinearMap",
    "OracleConvexFunction",
    "NotConvexError",
    "ProxBudgetExhausted",
    "ProxSolveReport",
    "MetricEstimate",
    "evaluate",
    "conjugate",
    "add_quadratic",
    "check_convexity",
    "minimize",
    "prox_plq",
    "envelope_plq",
    "envelope_at",
    "envelope_gradient",
    "moreau_decomposition_residual",
    "proximal_average",
    "prox_inverse",
    "prox_oracle",
    "truncation_level",
    "ball_sup_norm",
    "ball_sup_norm_oracle",
    "aw_distance",
    "envelope_distance",
    "conjugation_isometry_residual",
    "strong_convexity_report",
    "coercivity_test",
    "annulus_gap",
    "unrestricted_gap",
    "strong_minimizer_certificate",
    "em_openness_radius",
    "epi_convergence_probe",
    "relate_modulus_envelope",
    "strongify",
    "verify_mvt_bound",
    "meagre_family_member",
]
