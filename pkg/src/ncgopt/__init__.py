"""Matrix-free second-order nonconvex optimization with noisy negative
curvature steps that compete against gradient descent, plus the benchmark
harness that accounts for every Hessian-vector product."""

from .accel import PenalizedObjective, agd, almost_convex_agd, ncg_b1, ncg_b2
from .core import (
    OracleCounters,
    Point,
    ProblemOracle,
    SmoothnessParams,
    dense_cap,
    finite_difference_check,
)
from .eigensolver import CurvatureEstimate, dense_min_eig, lanczos_budget, lanczos_min_eig
from .harness import certify, sample_sizes
from .problems import (
    build_problem,
    list_problems,
    make_finite_sum_problem,
    make_matfac_problem,
    make_trig_problem,
)
from .solvers import SolveConfig, SolveReport, gd, ih_ncg_a, ncd, ncg_a1, ncg_a2, sncg
from .steps import (
    StepKind,
    StepResult,
    exact_hessian_surrogate,
    ih_ncg_step,
    ncg_s_step,
    ncg_step,
    perturbed_hessian_surrogate,
    subsampled_hessian_surrogate,
)

__version__ = "0.1.0"

__all__ = [
    "CurvatureEstimate",
    "OracleCounters",
    "PenalizedObjective",
    "Point",
    "ProblemOracle",
    "SmoothnessParams",
    "SolveConfig",
    "SolveReport",
    "StepKind",
    "StepResult",
    "agd",
    "almost_convex_agd",
    "build_problem",
    "certify",
    "dense_cap",
    "dense_min_eig",
    "exact_hessian_surrogate",
    "finite_difference_check",
    "gd",
    "ih_ncg_a",
    "ih_ncg_step",
    "lanczos_budget",
    "lanczos_min_eig",
    "list_problems",
    "make_finite_sum_problem",
    "make_matfac_problem",
    "make_trig_problem",
    "ncd",
    "ncg_a1",
    "ncg_a2",
    "ncg_b1",
    "ncg_b2",
    "ncg_s_step",
    "ncg_step",
    "perturbed_hessian_surrogate",
    "sample_sizes",
    "sncg",
    "subsampled_hessian_surrogate",
]
