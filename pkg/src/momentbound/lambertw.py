"""Real Lambert W on the two branches that solve w * exp(w) = x for x in [-1/e, 0).

The lower branch (w <= -1) feeds the boundary-branch support point of the
exponential-moment solver; the principal branch exists for validation.  Both
use an asymptotic initial guess refined by Halley steps, with a bisection
fallback so results are deterministic for any admissible input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

BRANCH_POINT = -math.exp(-1.0)  # -1/e, where the two real branches meet

_BRANCH_WINDOW = 1e-12  # inputs this close to -1/e return w = -1 outright
_REL_STEP_TOL = 1e-15
_MAX_HALLEY = 100


@dataclass(frozen=True)
class WValue:
    w: float
    residual: float  # |w * exp(w) - x|


def _residual(w: float, x: float) -> float:
    return abs(w * math.exp(w) - x)


def _halley(x: float, w: float) -> float:
    """Iterate w <- w - f/(f' - f*f''/(2f')) for f(w) = w e^w - x."""
    for _ in range(_MAX_HALLEY):
        if w == -1.0:
            break  # derivative vanishes at the branch point
        e = math.exp(w)
        fw = w * e - x
        denom = e * (w + 1.0) - (w + 2.0) * fw / (2.0 * (w + 1.0))
        if denom == 0.0:
            break
        step = fw / denom
        w_next = w - step
        if not math.isfinite(w_next):
            break
        if abs(step) <= _REL_STEP_TOL * max(abs(w_next), 1e-300):
            return w_next
        w = w_next
    return w


def _bisect_w(x: float, lo: float, hi: float) -> float:
    # sign convention: g(w) = w e^w - x changes sign on (lo, hi)
    g_lo = lo * math.exp(lo) - x
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g_mid = mid * math.exp(mid) - x
        if g_mid == 0.0:
            return mid
        if (g_mid > 0.0) == (g_lo > 0.0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, abs(lo)):
            break
    return 0.5 * (lo + hi)


def lambert_w_minus1(x: float) -> WValue:
    """Lower real branch: the solution w <= -1 of w * exp(w) = x, x in [-1/e, 0)."""
    if not (BRANCH_POINT <= x < 0.0):
        raise DomainError(f"W_-1 needs x in [-1/e, 0), got {x}")
    if x <= BRANCH_POINT + _BRANCH_WINDOW:
        return WValue(w=-1.0, residual=_residual(-1.0, x))

    lx = math.log(-x)  # < -1 on this domain
    w = lx - math.log(-lx)
    w = _halley(x, w)
    if not (w <= -1.0 and _residual(w, x) <= 1e-13 * max(1.0, abs(x))):
        # Halley drifted toward the upper branch or stalled; fall back to a
        # guaranteed bracket.  g(-1) < 0 and g(w) -> -x > 0 as w -> -inf.
        lo = min(2.0 * (lx - math.log(-lx)), -2.0)
        while lo * math.exp(lo) - x <= 0.0 and lo > -745.0:
            lo *= 2.0
        w = _halley(x, _bisect_w(x, lo, -1.0))
        w = min(w, -1.0)
    return WValue(w=w, residual=_residual(w, x))


def lambert_w_0(x: float) -> WValue:
    """Principal real branch: the solution w >= -1 of w * exp(w) = x, x >= -1/e."""
    if x < BRANCH_POINT:
        raise DomainError(f"W_0 needs x >= -1/e, got {x}")
    if x <= BRANCH_POINT + _BRANCH_WINDOW:
        return WValue(w=-1.0, residual=_residual(-1.0, x))
    if x == 0.0:
        return WValue(w=0.0, residual=0.0)

    if x < -0.25:
        # series around the branch point: w = -1 + p - p^2/3 + ...
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p - p * p / 3.0
    elif x < math.e:
        w = x / (1.0 + x) if x > 0.0 else x
    else:
        w = math.log(x) - math.log(math.log(x))
    w = _halley(x, w)
    if not (w >= -1.0 and _residual(w, x) <= 1e-13 * max(1.0, abs(x))):
        lo, hi = (-1.0, 0.0) if x < 0.0 else (0.0, max(1.0, math.log(x) + 1.0) if x >= math.e else 1.0)
        while hi * math.exp(hi) - x < 0.0:
            hi *= 2.0
        w = _halley(x, _bisect_w(x, lo, hi))
        w = max(w, -1.0)
    return WValue(w=w, residual=_residual(w, x))
