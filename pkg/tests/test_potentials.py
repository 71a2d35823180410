import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from plapfuchs.errors import DomainError
from plapfuchs.exponents import Params, hardy_constant
from plapfuchs.numerics import sphere_area
from plapfuchs.potentials import (DilationSequence, Potential, Shell, canonical_tests, evaluate,
                                  fuchsian_bound, hardy, lq_criterion, probe_integral, scale, shell_example,
                                  shell_sequence, weak_fuchsian_check, weakstar_probe)
from plapfuchs.potentials import TestProfile as Bump

P3 = Params(3.0, 2)
SHIPPED = [
    hardy(0.3),
    shell_example(3.0),
    Potential(shells=(Shell(0.0, 1.0, 2.0, -2.5), Shell(3.0, 9.0, -1.0, -3.0))),
    Potential(hardy_coeff=0.01, sampled_r=(0.5, 1.0, 2.0, 4.0), sampled_v=(4.0, 1.0, 0.2, 0.0)),
]


class TestEvaluate:
    def test_values(self):
        assert evaluate(hardy(1.0), 2.0, 2.0) == pytest.approx(-0.25)
        assert evaluate(Potential(), 3.0, 2.0) == 0.0
        V = Potential(shells=(Shell(1.0, 2.0, 1.0, -3.0),))
        assert evaluate(V, 1.5, 3.0) == pytest.approx(1.5**-3)
        assert evaluate(V, 2.0, 3.0) == 0.0  # half-open shell

    def test_angular_factor(self):
        V = Potential(hardy_coeff=1.0, angular="1 + cos(theta)")
        assert evaluate(V, 1.0, 2.0, theta=0.0) == pytest.approx(-2.0)
        assert evaluate(V, 1.0, 2.0) == pytest.approx(-1.0)

    def test_nonpositive_radius(self):
        with pytest.raises(DomainError):
            evaluate(hardy(1.0), 0.0, 2.0)

    def test_malformed(self):
        with pytest.raises(DomainError):
            Shell(2.0, 1.0, 1.0, 0.0)
        with pytest.raises(DomainError):
            Potential(sampled_r=(1.0, 0.5), sampled_v=(1.0, 2.0))

    def test_sampled_interpolates_in_log_r(self):
        V = Potential(sampled_r=(1.0, 4.0), sampled_v=(0.0, 2.0))
        assert evaluate(V, 2.0, 2.0) == pytest.approx(1.0)


class TestFuchsianBound:
    @pytest.mark.parametrize("lo,hi", [(1e-6, 1e-3), (0.5, 2.0), (10.0, 1e5)])
    def test_hardy(self, lo, hi):
        assert fuchsian_bound(hardy(-0.7), P3, lo, hi) == pytest.approx(0.7, rel=1e-12)

    def test_shell_example(self):
        assert fuchsian_bound(shell_example(3.0), P3, 1e-20, 1.0) == pytest.approx(1.0, rel=1e-12)

    def test_bounded_potential_shrinks(self):
        V = Potential(shells=(Shell(0.0, 1.0, 5.0, 0.0),))
        for r_hi in (1e-1, 1e-2, 1e-3):
            assert fuchsian_bound(V, P3, r_hi * 1e-3, r_hi) <= 5.0 * r_hi**3 * (1 + 1e-12)

    def test_essential_set_annuli(self):
        V = Potential(shells=(Shell(1.0, 2.0, 1.0, -3.0), Shell(10.0, 20.0, 7.0, -3.0)))
        assert fuchsian_bound(V, P3, annuli=[(1.0, 1.9)]) == pytest.approx(1.0)
        assert fuchsian_bound(V, P3, annuli=[(1.0, 1.9), (11.0, 12.0)]) == pytest.approx(7.0)

    @given(st.sampled_from(range(len(SHIPPED))), st.floats(1e-3, 1e3), st.floats(0.01, 10.0))
    def test_invariance_under_dilation(self, which, R, a):
        V = SHIPPED[which]
        b = 3.0 * a
        lhs = fuchsian_bound(scale(V, R, P3), P3, a, b)
        rhs = fuchsian_bound(V, P3, a * R, b * R)
        assert lhs <= rhs * (1 + 1e-12) + 1e-12


class TestScale:
    def test_hardy_fixed(self):
        assert scale(hardy(0.4), 17.0, P3) == hardy(0.4)

    def test_shell_to_unit(self):
        Rn = 2.0**-9
        V = Potential(shells=(Shell(Rn, 2 * Rn, 1.0, -3.0),))
        s = scale(V, Rn, P3).shells[0]
        assert (s.r_lo, s.r_hi, s.amplitude, s.power) == pytest.approx((1.0, 2.0, 1.0, -3.0))

    def test_zero(self):
        assert scale(Potential(), 3.0, P3).is_zero

    @given(st.sampled_from(range(len(SHIPPED))), st.floats(1e-2, 1e2), st.floats(1e-2, 1e2))
    def test_composition(self, which, R, S):
        V = SHIPPED[which]
        r = np.geomspace(1e-3, 1e3, 97)
        a = scale(scale(V, R, P3), S, P3).radial(r, P3.p)
        b = scale(V, R * S, P3).radial(r, P3.p)
        # shells are half-open: skip nodes within rounding of an edge
        edges = np.array([e for sh in scale(V, R * S, P3).shells for e in (sh.r_lo, sh.r_hi) if e > 0] or [np.inf])
        far = np.min(np.abs(r[:, None] / edges[None, :] - 1.0), axis=1) > 1e-9
        np.testing.assert_allclose(a[far], b[far], rtol=1e-12, atol=1e-12)

    def test_nonpositive_factor(self):
        with pytest.raises(DomainError):
            scale(hardy(1.0), 0.0, P3)


class TestWeakstarProbe:
    def test_hardy_candidate_is_exact(self):
        rep = weakstar_probe(hardy(0.2), DilationSequence.geometric(0.0, 8), hardy(0.2), P3)
        assert max(rep.max_deviation) < 1e-12
        assert rep.converged

    def test_shells_converge_to_single_shell(self):
        cand = Potential(shells=(Shell(1.0, 2.0, 1.0, -3.0),))
        rep = weakstar_probe(shell_example(3.0), shell_sequence(), cand, P3)
        assert rep.converged
        assert max(rep.max_deviation[2:]) < 1e-12

    def test_second_dilation_reaches_zero(self):
        cand = Potential(shells=(Shell(1.0, 2.0, 1.0, -3.0),))
        rep = weakstar_probe(cand, shell_sequence(), Potential(), P3)
        assert rep.converged
        assert rep.max_deviation[-1] == 0.0

    def test_single_shell_integral(self):
        # the test bump is an input; the integral of r^-3 phi(r) r over its support by direct quadrature
        from scipy.integrate import quad

        q = Bump(math.log(1.4), 0.3)
        V = Potential(shells=(Shell(1.0, 2.0, 1.0, -3.0),))
        a, b = q.support
        ref = 2 * math.pi * quad(lambda r: r**-2 * float(q(r)), max(a, 1.0), min(b, 2.0), epsrel=1e-13)[0]
        assert probe_integral(V, q, q.support, P3) == pytest.approx(ref, rel=1e-10)

    @given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(0.1, 0.8))
    def test_linear_in_test_profile(self, c1, c2, w):
        V = SHIPPED[2]
        q1, q2 = Bump(c1, w), Bump(c2, w)
        lo = min(q1.support[0], q2.support[0])
        hi = max(q1.support[1], q2.support[1])
        both = probe_integral(V, lambda r: q1(r) + q2(r), (lo, hi), P3, breakpoints=q1.support + q2.support)
        parts = probe_integral(V, q1, q1.support, P3) + probe_integral(V, q2, q2.support, P3)
        assert both == pytest.approx(parts, rel=1e-9, abs=1e-12)

    def test_canonical_family(self):
        tests = canonical_tests()
        assert len(tests) == 10
        assert tests[0].support[0] == pytest.approx(2.0**-3)
        assert tests[-1].support[1] == pytest.approx(2.0**3)


class TestWeakFuchsian:
    def test_vanishing_scaled_potential(self):
        # r^p V = r^0.5 -> 0 at the origin: one dilation reaches the p-Laplacian
        V = Potential(shells=(Shell(0.0, 1.0, 1.0, -2.5),))
        rep = weak_fuchsian_check(V, [DilationSequence.geometric(0.0, 60, 2.0, 1.0)], P3)
        assert rep.weak_fuchsian and rep.stages_used == 1

    def test_shell_example_needs_two(self):
        rep = weak_fuchsian_check(shell_example(3.0), [shell_sequence(), shell_sequence()], P3)
        assert rep.weak_fuchsian and rep.stages_used == 2

    def test_shell_example_one_stage_is_not_enough(self):
        rep = weak_fuchsian_check(shell_example(3.0), [shell_sequence()], P3)
        assert not rep.weak_fuchsian

    def test_hardy_is_fixed_point(self):
        seq = DilationSequence.geometric(0.0, 20)
        rep = weak_fuchsian_check(hardy(0.5 * hardy_constant(P3)), [seq, seq, seq], P3)
        assert not rep.weak_fuchsian and rep.fixed_point

    def test_oscillating_limits_reported(self):
        # shells on [4^-n, 2*4^-n) for even n only: along R_n = 4^-n the scaled potential alternates
        shells = tuple(Shell(4.0**-n, 2 * 4.0**-n, 1.0, -3.0) for n in range(2, 40, 2))
        seq = DilationSequence(tuple(4.0**-n for n in range(2, 30)), 0.0)
        rep = weak_fuchsian_check(Potential(shells=shells), [seq], P3)
        assert not rep.weak_fuchsian
        assert len(rep.alternatives) == 2
        assert "two limits" in rep.note

    def test_stage_limit(self):
        seq = DilationSequence.geometric(0.0, 4)
        with pytest.raises(DomainError):
            weak_fuchsian_check(hardy(0.1), [seq] * 4, P3)


class TestDilationSequence:
    def test_monotonicity_enforced(self):
        with pytest.raises(DomainError):
            DilationSequence((1.0, 2.0), 0.0)
        with pytest.raises(DomainError):
            DilationSequence((2.0, 1.0), math.inf)


class TestLq:
    def test_integrable_power_certified(self):
        # V = r^{-p+eps} on (0, 1): norm^q = omega_{d-1} / ((-p+eps) q + d)
        prm = Params(1.5, 3)
        V = Potential(shells=(Shell(0.0, 1.0, 1.0, -1.4),))
        rep = lq_criterion(V, 2.1, prm, 0.0)
        assert rep.certified
        assert rep.norm_estimate == pytest.approx(sphere_area(3) / (-1.4 * 2.1 + 3), rel=1e-8)

    def test_hardy_not_certified(self):
        prm = Params(2.0, 3)
        rep = lq_criterion(hardy(1e-3), 1.6, prm, 0.0)
        assert not rep.norm_finite and not rep.certified

    def test_zero(self):
        for zeta, q in ((0.0, 3.0), (math.inf, 1.0)):
            rep = lq_criterion(Potential(), q, Params(2.0, 3), zeta)
            assert rep.certified and rep.norm_estimate == 0.0

    def test_wrong_exponent_side(self):
        rep = lq_criterion(Potential(), 1.2, Params(2.0, 3), 0.0)
        assert rep.norm_finite and not rep.certified

    def test_q_below_one(self):
        with pytest.raises(DomainError):
            lq_criterion(Potential(), 0.5, Params(2.0, 3), 0.0)
