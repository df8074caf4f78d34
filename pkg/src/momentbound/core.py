"""Domain types for moment problems and the generic primal-dual optimality verifier.

A problem instance pairs an objective function g with moment functions
(h_0, ..., h_n) and target moments (m_0, ..., m_n), m_0 = 1.  A candidate
answer is a finitely supported distribution plus a dual coefficient vector z
inducing H(x; z) = sum_i z_i h_i(x) - g(x).  The pair is optimal exactly when

  * the distribution reproduces every target moment,
  * H vanishes at every support point (complementary slackness),
  * H' vanishes at every differentiable interior support point (tangency),
  * H has the feasible sign on the whole support domain.

``verify_optimality`` measures all four as residuals and applies explicit
tolerances, so every solver in this package can certify its own output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError, DomainError, NonDifferentiableError

Array = np.ndarray

_NONDIFF_SNAP = 1e-12  # support points this close to a kink skip the tangent check


@dataclass(frozen=True)
class MomentFunction:
    """A measurable function on [0, inf) with an optional derivative.

    ``eval`` and ``deriv`` must accept scalars or numpy arrays.  ``deriv`` is
    trusted everywhere except at ``nondiff_points``, where callers must not
    use it.
    """

    id: str
    eval: Callable[[Array | float], Array | float]
    deriv: Callable[[Array | float], Array | float]
    nondiff_points: tuple[float, ...] = ()


def constant() -> MomentFunction:
    """The normalization function h_0 = 1."""
    return MomentFunction(
        id="1",
        eval=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        deriv=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    )


def monomial(power: float) -> MomentFunction:
    """x**power on [0, inf); power >= 1 so the derivative exists at 0."""
    if power < 1.0:
        raise DomainError(f"monomial power must be >= 1, got {power}")
    if power == 1.0:
        return MomentFunction(
            id="x",
            eval=lambda x: np.asarray(x, dtype=float) + 0.0,
            deriv=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        )
    return MomentFunction(
        id=f"x^{power:g}",
        eval=lambda x: np.power(np.asarray(x, dtype=float), power),
        deriv=lambda x: power * np.power(np.asarray(x, dtype=float), power - 1.0),
    )


def positive_part(kink: float) -> MomentFunction:
    """(x - kink)_+, non-differentiable exactly at the kink."""
    return MomentFunction(
        id=f"(x-{kink:g})+",
        eval=lambda x: np.maximum(np.asarray(x, dtype=float) - kink, 0.0),
        deriv=lambda x: np.where(np.asarray(x, dtype=float) > kink, 1.0, 0.0),
        nondiff_points=(float(kink),),
    )


def squared_positive_part(kink: float) -> MomentFunction:
    """(x - kink)_+^2; its derivative 2(x - kink)_+ is continuous everywhere."""
    return MomentFunction(
        id=f"(x-{kink:g})+^2",
        eval=lambda x: np.maximum(np.asarray(x, dtype=float) - kink, 0.0) ** 2,
        deriv=lambda x: 2.0 * np.maximum(np.asarray(x, dtype=float) - kink, 0.0),
    )


def exponential(rate: float) -> MomentFunction:
    """exp(rate * x)."""
    return MomentFunction(
        id=f"e^{rate:g}x",
        eval=lambda x: np.exp(rate * np.asarray(x, dtype=float)),
        deriv=lambda x: rate * np.exp(rate * np.asarray(x, dtype=float)),
    )


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite support with strictly positive probabilities summing to one."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.points:
            raise DomainError("distribution needs at least one support point")
        xs = [x for x, _ in self.points]
        ps = [p for _, p in self.points]
        if any(x < 0.0 for x in xs):
            raise DomainError("support points must be nonnegative")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise DomainError("support points must be strictly increasing")
        if any(p <= 0.0 for p in ps):
            raise DomainError("probabilities must be strictly positive")
        if abs(math.fsum(ps) - 1.0) > 1e-12:
            raise DomainError(f"probabilities sum to {math.fsum(ps)!r}, not 1")

    @property
    def xs(self) -> Array:
        return np.array([x for x, _ in self.points], dtype=float)

    @property
    def ps(self) -> Array:
        return np.array([p for _, p in self.points], dtype=float)


@dataclass(frozen=True)
class DualCertificate:
    """Coefficients z aligned with (h_0, ..., h_n)."""

    z: tuple[float, ...]

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.z):
            raise DomainError("certificate entries must be finite")


@dataclass(frozen=True)
class GmpInstance:
    """One moment problem: optimize E[g(X)] subject to E[h_i(X)] = m_i.

    ``support_hi`` truncates the (mathematically infinite) support domain for
    numerical scans; solvers choose it large enough to cover any optimum.
    """

    g: MomentFunction
    hs: tuple[MomentFunction, ...]
    ms: tuple[float, ...]
    sense: str  # "max" or "min"
    support_hi: float

    def __post_init__(self) -> None:
        if len(self.hs) != len(self.ms):
            raise DimensionError(f"{len(self.hs)} moment functions vs {len(self.ms)} targets")
        if self.ms[0] != 1.0:
            raise DomainError("first target moment must be 1 (normalization)")
        if self.sense not in ("max", "min"):
            raise DomainError(f"sense must be 'max' or 'min', got {self.sense!r}")
        if not (self.support_hi > 0.0):
            raise DomainError("support_hi must be positive")

    def nondiff_points(self) -> tuple[float, ...]:
        pts: list[float] = list(self.g.nondiff_points)
        for h in self.hs:
            pts.extend(h.nondiff_points)
        return tuple(sorted(set(pts)))


@dataclass(frozen=True)
class ToleranceSet:
    """Residual tolerances for certification.

    ``primal`` is relative to max(1, |m|_inf) and ``gap`` to max(1, |value|);
    the others are absolute.  ``grid_points`` sets the density of the dual
    feasibility scan.
    """

    primal: float = 1e-9
    slack: float = 1e-8
    tangent: float = 1e-6
    dual: float = 1e-7
    gap: float = 1e-8
    grid_points: int = 10_000


@dataclass(frozen=True)
class VerificationReport:
    """Residuals of the four optimality conditions plus the duality gap.

    ``dual_min_on_grid`` is the scanned minimum of H for maximization
    instances and of -H for minimization instances, so feasibility always
    reads ``dual_min_on_grid >= -tol.dual``.
    """

    primal_residual: float
    slack_residual: float
    tangent_residual: float
    dual_min_on_grid: float
    duality_gap: float
    passed: bool
    primal_value: float
    dual_value: float


def moments_of(dist: DiscreteDistribution, hs: tuple[MomentFunction, ...]) -> Array:
    """Moment vector of a discrete distribution: component i is sum_j h_i(x_j) p_j."""
    xs, ps = dist.xs, dist.ps
    return np.array([float(np.dot(np.asarray(h.eval(xs), dtype=float), ps)) for h in hs])


def _h_values(cert: DualCertificate, inst: GmpInstance, xs: Array) -> Array:
    total = -np.asarray(inst.g.eval(xs), dtype=float)
    for z, h in zip(cert.z, inst.hs):
        if z != 0.0:
            total = total + z * np.asarray(h.eval(xs), dtype=float)
    return total


def _h_deriv_values(cert: DualCertificate, inst: GmpInstance, xs: Array) -> Array:
    total = -np.asarray(inst.g.deriv(xs), dtype=float)
    for z, h in zip(cert.z, inst.hs):
        if z != 0.0:
            total = total + z * np.asarray(h.deriv(xs), dtype=float)
    return total


def h_function(cert: DualCertificate, inst: GmpInstance, x: float) -> float:
    """H(x; z) = sum_i z_i h_i(x) - g(x)."""
    if len(cert.z) != len(inst.hs):
        raise DimensionError(f"certificate length {len(cert.z)} vs {len(inst.hs)} functions")
    if not (0.0 <= x <= inst.support_hi):
        raise DomainError(f"x={x} outside [0, {inst.support_hi}]")
    return float(_h_values(cert, inst, np.asarray([x]))[0])


def h_derivative(cert: DualCertificate, inst: GmpInstance, x: float) -> float:
    """d/dx H(x; z) where defined; raises at any declared kink."""
    if len(cert.z) != len(inst.hs):
        raise DimensionError(f"certificate length {len(cert.z)} vs {len(inst.hs)} functions")
    if not (0.0 <= x <= inst.support_hi):
        raise DomainError(f"x={x} outside [0, {inst.support_hi}]")
    for pt in inst.nondiff_points():
        if abs(x - pt) <= _NONDIFF_SNAP:
            raise NonDifferentiableError(f"H is not differentiable at x={pt}")
    return float(_h_deriv_values(cert, inst, np.asarray([x]))[0])


def verify_optimality(
    inst: GmpInstance,
    dist: DiscreteDistribution,
    cert: DualCertificate,
    tol: ToleranceSet = ToleranceSet(),
) -> VerificationReport:
    """Check the full optimality condition for a candidate primal-dual pair.

    Tangency is tested only at support points strictly inside
    (0, support_hi) and farther than 1e-12 from every declared kink.  Dual
    feasibility is sampled on a uniform grid augmented with the support and
    all kinks.
    """
    if len(cert.z) != len(inst.hs):
        raise DimensionError(f"certificate length {len(cert.z)} vs {len(inst.hs)} functions")
    xs, ps = dist.xs, dist.ps
    if xs[0] < 0.0 or xs[-1] > inst.support_hi:
        raise DomainError("distribution support exceeds [0, support_hi]")

    ms = np.asarray(inst.ms, dtype=float)
    primal_residual = float(np.max(np.abs(moments_of(dist, inst.hs) - ms)))
    slack_residual = float(np.max(np.abs(_h_values(cert, inst, xs))))

    kinks = inst.nondiff_points()
    interior = [
        x
        for x in xs
        if 0.0 < x < inst.support_hi
        and all(abs(x - pt) > _NONDIFF_SNAP for pt in kinks)
    ]
    if interior:
        tangent_residual = float(
            np.max(np.abs(_h_deriv_values(cert, inst, np.asarray(interior))))
        )
    else:
        tangent_residual = 0.0

    grid = np.concatenate(
        [np.linspace(0.0, inst.support_hi, tol.grid_points), xs, np.asarray(kinks)]
    )
    hg = _h_values(cert, inst, grid)
    signed = hg if inst.sense == "max" else -hg
    dual_min_on_grid = float(np.min(signed))

    primal_value = float(np.dot(np.asarray(inst.g.eval(xs), dtype=float), ps))
    dual_value = float(np.dot(np.asarray(cert.z, dtype=float), ms))
    duality_gap = abs(primal_value - dual_value)

    m_scale = max(1.0, float(np.max(np.abs(ms))))
    v_scale = max(1.0, abs(primal_value))
    passed = (
        primal_residual <= tol.primal * m_scale
        and slack_residual <= tol.slack
        and tangent_residual <= tol.tangent
        and dual_min_on_grid >= -tol.dual
        and duality_gap <= tol.gap * v_scale
    )
    return VerificationReport(
        primal_residual=primal_residual,
        slack_residual=slack_residual,
        tangent_residual=tangent_residual,
        dual_min_on_grid=dual_min_on_grid,
        duality_gap=duality_gap,
        passed=passed,
        primal_value=primal_value,
        dual_value=dual_value,
    )
