"""Independent ground truth: discretize the support and solve the finite LP.

Restricting a moment problem to a finite grid gives an ordinary linear
program over the point masses.  For maximization the grid optimum is a lower
bound that becomes exact as soon as the true optimal support lies on the
grid, which is why callers can seed the grid with a solver's support points
and demand agreement to near machine precision.

The LP is solved by a dense two-phase simplex with Bland's rule (lowest
eligible index enters; ratio ties leave by lowest basis index), so identical
inputs give bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DiscreteDistribution, GmpInstance
from .errors import DomainError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NO_CONVERGENCE = "no_convergence"

_RC_TOL = 1e-9  # reduced-cost threshold for entering columns
_PIVOT_TOL = 1e-11
_PHASE1_TOL = 1e-9  # leftover artificial mass that still counts as feasible


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on [lo, hi] plus optional exact extra points."""

    lo: float
    hi: float
    n_points: int
    refine_around: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not (0.0 <= self.lo < self.hi):
            raise DomainError(f"need 0 <= lo < hi, got [{self.lo}, {self.hi}]")
        if self.n_points < 2:
            raise DomainError("n_points must be at least 2")

    def points(self) -> np.ndarray:
        base = np.linspace(self.lo, self.hi, self.n_points)
        if self.refine_around:
            extra = np.asarray(
                [p for p in self.refine_around if p >= self.lo], dtype=float
            )
            base = np.unique(np.concatenate([base, extra]))
        return base

    def doubled(self) -> "GridSpec":
        # 2n-1 keeps every existing uniform point on the refined grid
        return GridSpec(
            lo=self.lo,
            hi=self.hi,
            n_points=2 * self.n_points - 1,
            refine_around=self.refine_around,
        )


@dataclass(frozen=True)
class OracleResult:
    value: float
    dist: DiscreteDistribution | None
    status: str
    grid: GridSpec
    duals: tuple[float, ...] | None


@dataclass(frozen=True)
class RefineOutcome:
    """Last oracle result plus the observed value sequence across refinements."""

    result: OracleResult
    values: tuple[float, ...]
    converged: bool
    rounds: int


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row] = T[row] / T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    basis[row] = col


def _run(T: np.ndarray, basis: list[int], n_enter: int) -> str:
    """Minimize the last tableau row over the first n_enter columns (Bland)."""
    while True:
        rc = T[-1, :n_enter]
        candidates = np.flatnonzero(rc < -_RC_TOL)
        if candidates.size == 0:
            return OPTIMAL
        j = int(candidates[0])
        col = T[:-1, j]
        eligible = np.flatnonzero(col > _PIVOT_TOL)
        if eligible.size == 0:
            return UNBOUNDED
        ratios = T[:-1, -1][eligible] / col[eligible]
        best = np.min(ratios)
        tied = eligible[ratios == best]
        row = int(min(tied, key=lambda r: basis[r]))
        _pivot(T, basis, row, j)
        rhs = T[:-1, -1]
        rhs[(rhs < 0.0) & (rhs > -1e-11)] = 0.0  # scrub roundoff-degenerate rows


def _two_phase_simplex(
    A: np.ndarray, b: np.ndarray, c: np.ndarray
) -> tuple[str, np.ndarray | None, list[int], np.ndarray | None]:
    """min c.x s.t. A x = b, x >= 0.  Returns (status, x, basis, duals)."""
    m, n = A.shape
    sign = np.where(b < 0.0, -1.0, 1.0)
    A1 = A * sign[:, None]
    b1 = b * sign

    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A1
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b1
    T[-1, :n] = -A1.sum(axis=0)
    T[-1, -1] = -b1.sum()
    basis = list(range(n, n + m))

    status = _run(T, basis, n)
    if status != OPTIMAL or -T[-1, -1] > _PHASE1_TOL:
        return INFEASIBLE, None, basis, None

    # pivot leftover artificials out; a row with no real pivot is redundant
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] >= n:
            real = np.flatnonzero(np.abs(T[i, :n]) > _PIVOT_TOL)
            if real.size:
                _pivot(T, basis, i, int(real[0]))
            else:
                keep[i] = False
    rows = np.flatnonzero(keep)
    basis2 = [basis[i] for i in rows]

    T2 = np.zeros((rows.size + 1, n + 1))
    T2[:-1, :n] = T[rows, :n]
    T2[:-1, -1] = T[rows, -1]
    T2[-1, :n] = c
    for i, bi in enumerate(basis2):
        T2[-1] -= T2[-1, bi] * T2[i]

    status = _run(T2, basis2, n)
    if status != OPTIMAL:
        return status, None, basis2, None

    x = np.zeros(n)
    B = A[np.ix_(rows, basis2)]
    # re-solve on the final basis with one refinement step for clean residuals
    xb = np.linalg.solve(B, b[rows])
    xb += np.linalg.solve(B, b[rows] - B @ xb)
    x[basis2] = xb

    y = np.zeros(m)
    y[rows] = np.linalg.solve(B.T, c[basis2])
    return OPTIMAL, x, basis2, y


def oracle_solve(inst: GmpInstance, grid: GridSpec) -> OracleResult:
    """Solve the moment problem restricted to the grid's point masses."""
    if grid.n_points < len(inst.hs) + 1:
        raise DomainError(
            f"grid needs at least {len(inst.hs) + 1} points for {len(inst.hs)} constraints"
        )
    xs = grid.points()
    A = np.vstack([np.asarray(h.eval(xs), dtype=float) for h in inst.hs])
    b = np.asarray(inst.ms, dtype=float)
    g = np.asarray(inst.g.eval(xs), dtype=float)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(g))):
        raise DomainError("moment functions are not finite on the grid")

    c = -g if inst.sense == "max" else g
    status, x, _, duals = _two_phase_simplex(A, b, c)
    if status != OPTIMAL:
        return OracleResult(value=math.nan, dist=None, status=status, grid=grid, duals=None)

    support = np.flatnonzero(x > 0.0)
    dist = DiscreteDistribution(
        points=tuple((float(xs[j]), float(x[j])) for j in support)
    )
    value = float(g[support] @ x[support])
    return OracleResult(
        value=value, dist=dist, status=OPTIMAL, grid=grid, duals=tuple(float(v) for v in duals)
    )


def refine_until(
    inst: GmpInstance, base_grid: GridSpec, target_tol: float, max_rounds: int
) -> RefineOutcome:
    """Re-solve on ever denser grids until successive values stabilize.

    Density roughly doubles each round.  Hitting max_rounds without meeting
    target_tol is reported through ``converged=False``, not an error.
    """
    if not target_tol > 0.0:
        raise DomainError("target_tol must be positive")
    grid = base_grid
    result = oracle_solve(inst, grid)
    values = [result.value]
    rounds = 0
    converged = False
    while rounds < max_rounds and result.status == OPTIMAL:
        grid = grid.doubled()
        result = oracle_solve(inst, grid)
        values.append(result.value)
        rounds += 1
        if abs(values[-1] - values[-2]) <= target_tol:
            converged = True
            break
    return RefineOutcome(
        result=result, values=tuple(values), converged=converged, rounds=rounds
    )
