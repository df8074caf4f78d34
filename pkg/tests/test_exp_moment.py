"""Mean plus exponential moment solver."""

import math

import numpy as np
import pytest

from momentbound import exp_moment
from momentbound.errors import (
    DomainError,
    InfeasibleError,
    NonFiniteError,
    RangeError,
)
from momentbound.exp_moment import (
    ExpMomentAmbiguity,
    ExpMomentInstance,
    boundary_threshold,
    compute_v1,
    phi,
    solve_exp_moment,
    value_curve,
)


def _bisect_v1(m1: float, me: float) -> float:
    """Independent root of exp(v) = ((me-1)/m1) v + 1 on (m1, big)."""
    c = (me - 1.0) / m1
    g = lambda v: math.exp(v) - c * v - 1.0
    lo, hi = m1, m1 + 1.0
    while g(hi) < 0.0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _random_instances(rng, n):
    out = []
    while len(out) < n:
        t = float(rng.uniform(0.05, 2.0))
        M1 = float(rng.uniform(0.1, 4.5) / t)
        ratio = float(rng.uniform(1.05, 3.0))
        tq = float(rng.uniform(0.1, 20.0))
        out.append(
            ExpMomentInstance(M1=M1, Me=ratio * math.exp(t * M1), t=t, q=tq / t)
        )
    return out


class TestComputeV1:
    def test_reference_instance(self):
        v1 = compute_v1(1.0, math.e**2)
        assert v1 == pytest.approx(3.0059341539036604, abs=1e-11)
        assert v1 == pytest.approx(_bisect_v1(1.0, math.e**2), abs=1e-10)

    def test_defining_identity_randomized(self):
        rng = np.random.default_rng(89)
        for _ in range(100):
            m1 = float(rng.uniform(0.05, 4.0))
            me = float(rng.uniform(1.05, 3.0)) * math.exp(m1)
            v1 = compute_v1(m1, me)
            assert v1 > m1
            resid = abs(math.exp(v1) - ((me - 1.0) / m1) * v1 - 1.0)
            assert resid <= 1e-9 * me

    def test_collapse_limit(self):
        m1 = 1.0
        v1 = compute_v1(m1, math.exp(m1) * (1.0 + 1e-8))
        assert v1 == pytest.approx(m1, rel=1e-3)

    def test_nontrivial_root_selected(self):
        # exp(v) = (2e-2) v + 1 also holds at v = 1, which is not the answer
        v1 = compute_v1(1.0, 2.0 * math.e - 1.0)
        assert v1 > 1.0 + 1e-6
        resid = abs(math.exp(v1) - (2.0 * math.e - 2.0) * v1 - 1.0)
        assert resid <= 1e-9 * (2.0 * math.e - 1.0)


class TestPhi:
    def test_negative_at_zero_on_interior_instances(self):
        rng = np.random.default_rng(97)
        checked = 0
        for inst in _random_instances(rng, 200):
            if inst.q > boundary_threshold(inst):
                assert phi(0.0, inst) < 0.0
                checked += 1
        assert checked >= 40

    def test_positive_at_q_when_mean_exceeds_q(self):
        # interior instances with q below the mean need a moment ratio close
        # to the feasibility floor, so sample those directly
        rng = np.random.default_rng(101)
        checked = 0
        while checked < 10:
            m1 = float(rng.uniform(1.5, 4.0))
            me = float(rng.uniform(1.01, 1.08)) * math.exp(m1)
            probe = ExpMomentInstance(M1=m1, Me=me, t=1.0, q=m1)
            thr = boundary_threshold(probe)
            if not thr < m1:
                continue
            q = 0.5 * (thr + m1)
            if not thr < q < m1:
                continue
            inst = ExpMomentInstance(M1=m1, Me=me, t=1.0, q=q)
            assert phi(inst.q_scaled, inst) > 0.0
            checked += 1

    def test_blows_up_at_scaled_mean(self):
        rng = np.random.default_rng(103)
        checked = 0
        for inst in _random_instances(rng, 200):
            if inst.q > boundary_threshold(inst) and inst.m1_scaled <= inst.q_scaled:
                near = inst.m1_scaled * (1.0 - 1e-9)
                assert phi(near, inst) > 0.0
                checked += 1
        assert checked >= 20

    def test_domain_and_pole(self):
        inst = ExpMomentInstance(M1=1.0, Me=math.e**2, t=1.0, q=5.0)
        with pytest.raises(DomainError):
            phi(-0.1, inst)
        with pytest.raises(NonFiniteError):
            phi(1.0, inst)  # scaled mean


class TestSolve:
    def test_boundary_reference(self):
        rep = solve_exp_moment(ExpMomentInstance(M1=1.0, Me=math.e**2, t=1.0, q=1.0))
        assert rep.branch == exp_moment.BOUNDARY
        assert rep.value == pytest.approx(0.6673247154461622, abs=1e-11)
        assert rep.v1 == pytest.approx(3.0059341539036604, abs=1e-11)
        assert rep.verification.passed

    def test_boundary_threshold_reference(self):
        inst = ExpMomentInstance(M1=1.0, Me=math.e**2, t=1.0, q=1.0)
        assert boundary_threshold(inst) == pytest.approx(2.1624517966533261, abs=1e-10)

    def test_rate_scaling_identity(self):
        base = solve_exp_moment(ExpMomentInstance(M1=2.0, Me=math.e**2.5, t=0.5, q=3.0))
        scaled = solve_exp_moment(ExpMomentInstance(M1=1.0, Me=math.e**2.5, t=1.0, q=1.5))
        assert base.value == pytest.approx(scaled.value / 0.5, rel=1e-11)
        assert base.branch == scaled.branch

    def test_interior_ordering(self):
        inst = ExpMomentInstance(M1=1.0, Me=math.e**2, t=1.0, q=5.0)
        rep = solve_exp_moment(inst)
        assert rep.branch == exp_moment.INTERIOR
        u, v2 = rep.dist.xs
        assert 0.0 < u < 5.0 < v2
        assert u < 1.0 < v2
        assert rep.verification.passed

    def test_duality_randomized(self):
        rng = np.random.default_rng(107)
        for inst in _random_instances(rng, 60):
            rep = solve_exp_moment(inst)
            assert rep.verification.passed
            z = rep.cert.z
            dual = z[0] + z[1] * inst.M1 + z[2] * inst.Me
            assert rep.value == pytest.approx(dual, rel=1e-8, abs=1e-12)

    def test_branch_continuity_at_threshold(self):
        rng = np.random.default_rng(109)
        for _ in range(20):
            t = float(rng.uniform(0.1, 1.5))
            M1 = float(rng.uniform(0.2, 3.0) / t)
            me = float(rng.uniform(1.1, 2.5)) * math.exp(t * M1)
            probe = ExpMomentInstance(M1=M1, Me=me, t=t, q=M1)
            q_star = boundary_threshold(probe)
            if q_star <= 0.0:
                continue
            at = solve_exp_moment(ExpMomentInstance(M1=M1, Me=me, t=t, q=q_star))
            assert at.branch == exp_moment.BOUNDARY
            above = solve_exp_moment(
                ExpMomentInstance(M1=M1, Me=me, t=t, q=q_star * (1.0 + 1e-9))
            )
            assert above.branch == exp_moment.INTERIOR
            assert above.value == pytest.approx(at.value, rel=1e-6)

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            ExpMomentInstance(M1=1.0, Me=math.e, t=1.0, q=1.0)

    def test_range_guard(self):
        with pytest.raises(RangeError):
            ExpMomentInstance(M1=1.0, Me=10.0, t=1.0, q=800.0)

    def test_far_tail_raises_range_error(self):
        inst = ExpMomentInstance(M1=50.0, Me=2.0, t=0.01, q=5000.0)
        with pytest.raises(RangeError):
            solve_exp_moment(inst)


class TestAmbiguity:
    def test_from_exponential_demand(self):
        amb = ExpMomentAmbiguity.from_exponential_demand(lam=0.02, t=0.01)
        assert amb.M1 == pytest.approx(50.0)
        assert amb.Me == pytest.approx(2.0)
        with pytest.raises(DomainError):
            ExpMomentAmbiguity.from_exponential_demand(lam=0.02, t=0.03)

    def test_worst_case_at_zero_is_mean(self):
        amb = ExpMomentAmbiguity(M1=1.0, Me=math.e**2, t=1.0)
        assert amb.worst_case(0.0) == 1.0

    def test_far_tail_uses_markov_bound(self):
        amb = ExpMomentAmbiguity.from_exponential_demand(lam=0.02, t=0.01)
        v = amb.worst_case(5000.0)
        assert v == pytest.approx(amb.tail_bound(5000.0))
        assert v < 1e-10

    def test_tail_bound_dominates_solver(self):
        amb = ExpMomentAmbiguity(M1=1.0, Me=math.e**2, t=1.0)
        for q in (0.5, 2.0, 5.0, 9.0):
            assert amb.worst_case(q) <= amb.tail_bound(q) + 1e-12


class TestValueCurve:
    def test_boundary_branch_is_affine_in_q(self):
        amb = ExpMomentAmbiguity(M1=1.0, Me=math.e**2, t=1.0)
        qs = [0.5, 1.0, 1.5]
        curve = value_curve(amb, qs)
        v = [val for _, val in curve]
        assert v[0] - 2.0 * v[1] + v[2] == pytest.approx(0.0, abs=1e-12)

    def test_empty(self):
        assert value_curve(ExpMomentAmbiguity(M1=1.0, Me=math.e**2, t=1.0), []) == []

    def test_monotone_nonincreasing_and_convex(self):
        amb = ExpMomentAmbiguity(M1=1.0, Me=math.e**2, t=1.0)
        qs = list(np.linspace(0.2, 8.0, 40))
        vals = [v for _, v in value_curve(amb, qs)]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
        for i in range(1, len(vals) - 1):
            assert vals[i] <= 0.5 * (vals[i - 1] + vals[i + 1]) + 1e-9
