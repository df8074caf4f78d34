"""Minimal variance of (X - 1)_+ given mean, second moment, and E[(X - 1)_+].

Inputs are normalized so the threshold is 1 and the second moment is written
as gamma * M1^2.  Two regimes:

  * M1 <= 1/gamma + Mplus: the optimum is a unique two-point distribution
    straddling 1, with a strictly concave-quadratic dual certificate.
  * M1 >  1/gamma + Mplus: every feasible support inside {0} union [1, inf)
    attains the same objective; the solver returns a representative
    three-point member and can enumerate others.

Everything here is closed form; no root-finding is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import core
from .core import (
    DiscreteDistribution,
    DualCertificate,
    GmpInstance,
    ToleranceSet,
    VerificationReport,
)
from .errors import BranchError, FamilyParamError, InfeasibleError

TWO_POINT = "two_point"
DEGENERATE_FAMILY = "degenerate_family"


@dataclass(frozen=True)
class PartialMomentInstance:
    """Normalized data: mean M1, second moment gamma*M1^2, partial moment Mplus.

    Only necessary feasibility conditions are enforced here; a fully
    infeasible combination that slips through is caught by certificate
    verification after the solve.
    """

    M1: float
    gamma: float
    Mplus: float

    def __post_init__(self) -> None:
        if not self.M1 > 0.0:
            raise InfeasibleError(f"M1 > 0 required, got {self.M1}")
        if not self.gamma > 1.0:
            raise InfeasibleError(f"gamma > 1 required, got {self.gamma}")
        if not self.Mplus > 0.0:
            raise InfeasibleError(f"Mplus > 0 required, got {self.Mplus}")
        if self.M1 > 2.0 / self.gamma:
            raise InfeasibleError(f"feasibility requires M1 <= 2/gamma: {self.M1} > {2.0 / self.gamma}")
        if not self.Mplus > self.M1 - 1.0:
            raise InfeasibleError(
                f"feasibility requires Mplus > M1 - 1: {self.Mplus} <= {self.M1 - 1.0}"
            )

    @classmethod
    def from_raw(cls, M1: float, M2: float, Mplus: float, q: float) -> "PartialMomentInstance":
        """Normalize general (M1, M2, Mplus, q) by scaling X down by q.

        The normalized optimal variance is the raw one divided by q^2.
        """
        if not q > 0.0:
            raise InfeasibleError(f"q > 0 required, got {q}")
        m1 = M1 / q
        return cls(M1=m1, gamma=(M2 / q**2) / m1**2, Mplus=Mplus / q)

    def is_two_point(self) -> bool:
        return self.M1 <= 1.0 / self.gamma + self.Mplus


@dataclass(frozen=True)
class PartialMomentReport:
    value: float
    dist: DiscreteDistribution
    cert: DualCertificate
    branch: str
    kappa: float | None  # two-point branch only
    family_v1: float | None  # degenerate branch only
    verification: VerificationReport


def kappa(inst: PartialMomentInstance) -> float:
    """sqrt((gamma-1) * ((gamma-1)*M1^2 + 4*Mplus*(M1-1) - 4*Mplus^2))."""
    m1, g, mp = inst.M1, inst.gamma, inst.Mplus
    radicand = (g - 1.0) * ((g - 1.0) * m1 * m1 + 4.0 * mp * (m1 - 1.0) - 4.0 * mp * mp)
    if radicand < 0.0:
        raise InfeasibleError(f"no two-point distribution matches these moments (radicand {radicand})")
    return math.sqrt(radicand)


def _gmp_instance(inst: PartialMomentInstance, support_max: float) -> GmpInstance:
    return GmpInstance(
        g=core.squared_positive_part(1.0),
        hs=(
            core.constant(),
            core.monomial(1.0),
            core.monomial(2.0),
            core.positive_part(1.0),
        ),
        ms=(1.0, inst.M1, inst.gamma * inst.M1**2, inst.Mplus),
        sense="min",
        support_hi=10.0 * max(support_max, 1.0, inst.M1),
    )


def _two_point_cert(inst: PartialMomentInstance, k: float) -> DualCertificate:
    m1, g, mp = inst.M1, inst.gamma, inst.Mplus
    z0 = -0.5 * (
        (2.0 * mp - m1) * m1
        + m1
        * (2.0 * (g - 2.0) * mp * mp + (g - 1.0) * m1 * m1 - 2.0 * mp * (1.0 + (g - 2.0) * m1))
        / k
    )
    z1 = mp - m1 - (2.0 * mp * mp - (g - 1.0) * m1 * m1 + mp * (2.0 + (g - 3.0) * m1)) / k
    z2 = -0.5 * (((g - 1.0) * m1 * m1 + 2.0 * mp * (m1 - 1.0) - 2.0 * mp * mp) / (m1 * k) - 1.0)
    z3 = (m1 - 1.0) - (g - 1.0) * m1 * (m1 - 1.0 - 2.0 * mp) / k
    return DualCertificate(z=(z0, z1, z2, z3))


def family_lower_bound(inst: PartialMomentInstance) -> float:
    """Smallest admissible middle support point v1 on the degenerate branch."""
    return max(1.0, (inst.gamma * inst.M1**2 - inst.M1) / inst.Mplus)


def solve_partial_moment(
    inst: PartialMomentInstance,
    v1_choice: float | None = None,
    tol: ToleranceSet = ToleranceSet(),
) -> PartialMomentReport:
    m1, g, mp = inst.M1, inst.gamma, inst.Mplus

    if inst.is_two_point():
        if v1_choice is not None:
            raise BranchError("v1_choice only applies to the degenerate family branch")
        k = kappa(inst)
        if k <= 1e-14:
            raise InfeasibleError(
                "moment vector sits on the feasibility boundary; the dual certificate is undefined"
            )
        u = m1 * (1.0 - ((g - 1.0) * m1 + k) / (2.0 * (1.0 - m1 + mp)))
        v = m1 * (1.0 + ((g - 1.0) * m1 - k) / (2.0 * mp))
        if -1e-12 < u < 0.0:
            u = 0.0  # closed form guarantees u >= 0; absorb roundoff
        p_hi = (m1 - u) / (v - u)
        dist = DiscreteDistribution(points=((u, 1.0 - p_hi), (v, p_hi)))
        cert = _two_point_cert(inst, k)
        value = 0.5 * (2.0 * mp * (m1 - 1.0) + m1 * ((g - 1.0) * m1 - k)) - mp * mp
        report_kappa: float | None = k
        family_v1: float | None = None
        branch = TWO_POINT
        support_max = v
    else:
        lb = family_lower_bound(inst)
        if v1_choice is None:
            v1 = lb + 1.0  # strictly interior default keeps all three masses away from 0
        else:
            if v1_choice < lb - 1e-12:
                raise FamilyParamError(f"v1 must be >= {lb}, got {v1_choice}")
            v1 = float(v1_choice)
        v2 = (m1 * v1 - g * m1 * m1) / ((m1 - mp) * v1 - m1)
        den = g * m1 * m1 - 2.0 * m1 * v1 + m1 * v1 * v1 - mp * v1 * v1
        p0 = 1.0 - m1 + mp
        p1 = m1 * m1 * (g * m1 - g * mp - 1.0) / den
        p2 = (m1 * v1 - mp * v1 - m1) ** 2 / den
        # v2 < v1 always on this branch, so the sorted support is (0, v2, v1)
        dist = DiscreteDistribution(points=((0.0, p0), (v2, p2), (v1, p1)))
        cert = DualCertificate(z=(0.0, -1.0, 1.0, -1.0))
        value = m1 * (g * m1 - 1.0) - mp - mp * mp
        report_kappa = None
        family_v1 = v1
        branch = DEGENERATE_FAMILY
        support_max = v1

    gmp = _gmp_instance(inst, support_max)
    verification = core.verify_optimality(gmp, dist, cert, tol)
    return PartialMomentReport(
        value=value,
        dist=dist,
        cert=cert,
        branch=branch,
        kappa=report_kappa,
        family_v1=family_v1,
        verification=verification,
    )


def gmp_instance(inst: PartialMomentInstance, report: PartialMomentReport) -> GmpInstance:
    """The generic moment problem this instance describes, sized to its solution.

    Note the generic objective is E[(X-1)_+^2]; the reported optimal variance
    is that expectation minus Mplus^2.
    """
    return _gmp_instance(inst, float(report.dist.xs[-1]))


def enumerate_family(
    inst: PartialMomentInstance, v1_list: list[float], tol: ToleranceSet = ToleranceSet()
) -> list[PartialMomentReport]:
    """One report per requested middle support point of the degenerate family."""
    if inst.is_two_point():
        raise BranchError("instance is on the two-point branch; there is no family")
    return [solve_partial_moment(inst, v1_choice=v1, tol=tol) for v1 in v1_list]
