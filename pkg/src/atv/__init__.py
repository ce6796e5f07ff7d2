"""Adversarial nonlocal total variation on discrete domains.

Calculus (gradient, divergences, TV), the attained dual side with verified
subgradients, a certified primal-dual solver for the regularized
classification objective, and reproducible consistency / epsilon-limit
studies.  See the ``atv`` command-line entry point for the file-level
interfaces.
"""

from .domain import (
    DiscreteDomain,
    InteriorMask,
    build_ball_index,
    build_grid,
    build_point_cloud,
    interior_mask,
)
from .duality import (
    KernelPair,
    check_subgradient,
    dual_eval,
    duality_gap,
    maximizing_kernels,
    pushforward_subgradient,
    subgradient,
)
from .experiments import (
    SweepResult,
    SweepRow,
    cn_constant,
    consistency_study,
    gamma_limit_study,
    nonlocal_diffusion,
)
from .expressions import FieldExpr, div_rho_grad, integral_1d, parse_field
from .measures import ClassMeasures, Violation, from_samples, uniform_measures, validate
from .operators import (
    PairField,
    TransitionKernel,
    dirac_kernel,
    kernel_divergence,
    nonlocal_divergence_l1,
    nonlocal_gradient,
    pairing,
    random_kernel,
    uniform_kernel,
)
from .report import read_csv, read_field_csv, read_report, write_csv, write_field_csv, write_report
from .solver import (
    NonFiniteIterateError,
    SolveReport,
    SolverConfig,
    best_threshold,
    brute_force_indicator_minimum,
    certificate_lower_bound,
    estimate_coupling_norm,
    project_simplex_row,
    prox_data,
    solve_pd,
)
from .tv import CoareaResult, adversarial_risk_set, coarea_check, eval_objective, eval_tv

__version__ = "0.1.0"

__all__ = [
    "DiscreteDomain",
    "InteriorMask",
    "build_ball_index",
    "build_grid",
    "build_point_cloud",
    "interior_mask",
    "ClassMeasures",
    "Violation",
    "from_samples",
    "uniform_measures",
    "validate",
    "PairField",
    "TransitionKernel",
    "dirac_kernel",
    "uniform_kernel",
    "random_kernel",
    "nonlocal_gradient",
    "nonlocal_divergence_l1",
    "kernel_divergence",
    "pairing",
    "eval_tv",
    "eval_objective",
    "adversarial_risk_set",
    "coarea_check",
    "CoareaResult",
    "KernelPair",
    "maximizing_kernels",
    "dual_eval",
    "duality_gap",
    "subgradient",
    "pushforward_subgradient",
    "check_subgradient",
    "SolverConfig",
    "SolveReport",
    "NonFiniteIterateError",
    "prox_data",
    "project_simplex_row",
    "solve_pd",
    "certificate_lower_bound",
    "estimate_coupling_norm",
    "best_threshold",
    "brute_force_indicator_minimum",
    "FieldExpr",
    "parse_field",
    "div_rho_grad",
    "integral_1d",
    "SweepRow",
    "SweepResult",
    "cn_constant",
    "consistency_study",
    "gamma_limit_study",
    "nonlocal_diffusion",
    "write_csv",
    "read_csv",
    "write_field_csv",
    "read_field_csv",
    "write_report",
    "read_report",
    "__version__",
]
