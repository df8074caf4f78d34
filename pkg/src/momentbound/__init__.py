"""Tight worst/best-case expectation bounds over moment-constrained families.

Three solved problems, each returning a certified primal-dual pair:

  * ``power_moment``: max E[(X-q)_+] given E[X] and E[X^t], t > 1
  * ``partial_moment``: min Var[(X-1)_+] given E[X], E[X^2], E[(X-1)_+]
  * ``exp_moment``: max E[(X-q)_+] given E[X] and E[exp(t X)]

plus a discretized-LP oracle for independent ground truth, a generic
optimality verifier, and a distributionally robust newsvendor optimizer.
"""

from .core import (
    DiscreteDistribution,
    DualCertificate,
    GmpInstance,
    MomentFunction,
    ToleranceSet,
    VerificationReport,
    h_derivative,
    h_function,
    moments_of,
    verify_optimality,
)
from .exp_moment import (
    ExpMomentAmbiguity,
    ExpMomentInstance,
    ExpMomentReport,
    compute_v1,
    phi,
    solve_exp_moment,
)
from .lambertw import WValue, lambert_w_0, lambert_w_minus1
from .newsvendor import (
    ExponentialDemand,
    NewsvendorInstance,
    OrderDecision,
    ground_truth_quantile,
    optimize_order,
    worst_case_objective,
)
from .oracle import GridSpec, OracleResult, RefineOutcome, oracle_solve, refine_until
from .partial_moment import (
    PartialMomentInstance,
    PartialMomentReport,
    enumerate_family,
    kappa,
    solve_partial_moment,
)
from .power_moment import (
    PowerMomentAmbiguity,
    PowerMomentInstance,
    PowerMomentReport,
    boundary_threshold,
    solve_power_moment,
    theta,
)
from .rootfind import BisectResult, GoldenResult, bisect, expand_bracket, golden_section

__all__ = [
    "BisectResult",
    "DiscreteDistribution",
    "DualCertificate",
    "ExpMomentAmbiguity",
    "ExpMomentInstance",
    "ExpMomentReport",
    "ExponentialDemand",
    "GmpInstance",
    "GoldenResult",
    "GridSpec",
    "MomentFunction",
    "NewsvendorInstance",
    "OracleResult",
    "OrderDecision",
    "PartialMomentInstance",
    "PartialMomentReport",
    "PowerMomentAmbiguity",
    "PowerMomentInstance",
    "PowerMomentReport",
    "RefineOutcome",
    "ToleranceSet",
    "VerificationReport",
    "WValue",
    "bisect",
    "boundary_threshold",
    "compute_v1",
    "enumerate_family",
    "expand_bracket",
    "golden_section",
    "ground_truth_quantile",
    "h_derivative",
    "h_function",
    "kappa",
    "lambert_w_0",
    "lambert_w_minus1",
    "moments_of",
    "optimize_order",
    "oracle_solve",
    "phi",
    "refine_until",
    "solve_exp_moment",
    "solve_partial_moment",
    "solve_power_moment",
    "theta",
    "verify_optimality",
    "worst_case_objective",
]

__version__ = "0.1.0"
