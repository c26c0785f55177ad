"""Numerics for information-constrained transport against Gaussian marginals.

Computes entropic-regularized and information-constrained inner-product
transport, discrete rate-distortion curves and their double-marginal variant,
truncated curve integrals with their two-sided transport comparisons, exact
method-of-types counting with a random-codebook simulation, and closed-form
Gaussian references.
"""

from .entropic import ConstrainedSolution, EotSolution, f_curve, sinkhorn_f, w_constrained
from .errors import ToolkitError
from .integrals import (
    BoundsReport,
    EquiCheckResult,
    bounds_report_beta,
    bounds_report_rate,
    equi_check,
    phi,
    phi_tail_integral,
    truncated_rd_integral,
)
from .measures import (
    CouplingMatrix,
    DiscreteMeasure,
    MonotoneCurve,
    load_measure,
    product_measure,
    quantize_gaussian,
    save_measure,
    second_moment,
    validate_measure,
)
from .oracles import gaussian_f, gaussian_rate_distortion, gaussian_w
from .rate_distortion import (
    RDSolveDiagnostics,
    ba_rate,
    default_multiplier_grid,
    default_reproduction,
    eval_curve,
    i_mu_curve,
    r_mu,
)
from .types_engine import (
    JointTypeSpec,
    LiftingEstimate,
    TypeSpec,
    chernoff_binomial_bound,
    conditional_type_count,
    cycle_round,
    is_rational,
    sample_type_sequence,
    simulate_lifting,
    type_class_size,
)

__version__ = "0.1.0"

__all__ = [
    "BoundsReport",
    "ConstrainedSolution",
    "CouplingMatrix",
    "DiscreteMeasure",
    "EotSolution",
    "EquiCheckResult",
    "JointTypeSpec",
    "LiftingEstimate",
    "MonotoneCurve",
    "RDSolveDiagnostics",
    "ToolkitError",
    "TypeSpec",
    "ba_rate",
    "bounds_report_beta",
    "bounds_report_rate",
    "chernoff_binomial_bound",
    "conditional_type_count",
    "cycle_round",
    "default_multiplier_grid",
    "default_reproduction",
    "equi_check",
    "eval_curve",
    "f_curve",
    "gaussian_f",
    "gaussian_rate_distortion",
    "gaussian_w",
    "i_mu_curve",
    "is_rational",
    "load_measure",
    "phi",
    "phi_tail_integral",
    "product_measure",
    "quantize_gaussian",
    "r_mu",
    "sample_type_sequence",
    "save_measure",
    "second_moment",
    "simulate_lifting",
    "sinkhorn_f",
    "truncated_rd_integral",
    "type_class_size",
    "validate_measure",
    "w_constrained",
]
