import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from plapfuchs.errors import DomainError, PreconditionError, SolvabilityError
from plapfuchs.exponents import Params, fundamental_solution, hardy_constant, solve_gamma
from plapfuchs.numerics import log_grid
from plapfuchs.potentials import Potential, Shell, hardy, shell_example
from plapfuchs.radial import (bvp_dirichlet, classify_asymptotics, dyadic_limit, eventually_monotone, ivp_solve,
                              minimal_growth_exhaustion, nonneg_limit_check, quotient_profile, radial_from_values,
                              veron_rescale)


def power_solution(prm, lam, which, grid):
    pair = solve_gamma(lam, prm)
    g = pair.gamma_minus if which == "minus" else pair.gamma_plus
    return g, radial_from_values(grid, grid**g, prm, hardy(lam))


class TestIvp:
    @pytest.mark.parametrize("p,d", [(2.0, 3), (3.0, 2), (1.5, 3), (4.5, 2)])
    def test_tracks_hardy_power(self, p, d):
        prm = Params(p, d)
        lam = 0.5 * hardy_constant(prm) - 0.2
        g = solve_gamma(lam, prm).gamma_minus
        r0 = 2.0
        sol = ivp_solve(prm, hardy(lam), r0, r0**g, g * r0 ** (g - 1), 20.0)
        assert np.max(np.abs(sol.v / sol.grid**g - 1)) < 1e-8

    def test_constant(self):
        sol = ivp_solve(Params(3.0, 2), Potential(), 1.0, 2.5, 0.0, 1e3)
        np.testing.assert_allclose(sol.v, 2.5, rtol=0, atol=1e-14)

    def test_log_branch(self):
        prm = Params(3.0, 3)
        r0 = 2.0
        sol = ivp_solve(prm, Potential(), r0, math.log(r0), 1 / r0, 200.0)
        np.testing.assert_allclose(sol.v, np.log(sol.grid), rtol=1e-9)

    def test_inward(self):
        prm = Params(2.0, 3)
        sol = ivp_solve(prm, Potential(), 1.0, 1.0, -1.0, 0.01)
        assert sol.grid[0] == pytest.approx(0.01) and np.all(np.diff(sol.grid) > 0)
        np.testing.assert_allclose(sol.v, 1 / sol.grid, rtol=1e-9)

    def test_halts_at_zero(self):
        # v = 1 - log r leaves the positive cone at r = e
        sol = ivp_solve(Params(2.0, 2), Potential(), 1.0, 1.0, -1.0, 10.0)
        assert sol.info["hit_zero"]
        assert sol.info["r_zero"] == pytest.approx(math.e, rel=1e-8)
        assert sol.r_max <= math.e * (1 + 1e-8)

    def test_degenerate_point(self):
        # p > 2 and v' = 0 at the start: the regularized flux keeps the integrator moving
        prm = Params(4.0, 2)
        sol = ivp_solve(prm, shell_example(4.0, 3), 1.0, 1.0, 0.0, 1e-8)
        assert np.all(sol.v > 0) and sol.r_min == pytest.approx(1e-8)

    def test_shell_jumps(self):
        V = Potential(shells=(Shell(1.0, 2.0, 3.0, -2.0),))
        sol = ivp_solve(Params(2.0, 3), V, 0.5, 1.0, 0.0, 4.0)
        # outside the shell v is harmonic: v = A + B/r on [2, 4]
        m = sol.grid > 2.05
        r, v = sol.grid[m], sol.v[m]
        coef, *_ = np.linalg.lstsq(np.vstack([np.ones_like(r), 1 / r]).T, v, rcond=None)
        assert np.max(np.abs(coef[0] + coef[1] / r - v)) < 1e-9 * np.max(v)

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            ivp_solve(Params(2.0, 3), Potential(), 0.0, 1.0, 0.0, 1.0)
        with pytest.raises(DomainError):
            ivp_solve(Params(2.0, 3), Potential(), 1.0, -1.0, 0.0, 2.0)


class TestBvp:
    @pytest.mark.parametrize("method", ["shooting", "fd"])
    @pytest.mark.parametrize("p,d", [(2.0, 3), (3.0, 2), (2.5, 3)])
    def test_power_oracle(self, method, p, d):
        prm = Params(p, d)
        lam = 0.5 * hardy_constant(prm)
        g = solve_gamma(lam, prm).gamma_minus
        sol = bvp_dirichlet(prm, hardy(lam), 1.0, 10.0, 1.0, 10.0**g, method=method, n=2048)
        assert np.max(np.abs(sol.v / sol.grid**g - 1)) < 1e-6

    def test_equal_data_constant(self):
        sol = bvp_dirichlet(Params(3.0, 2), Potential(), 0.5, 8.0, 2.0, 2.0)
        np.testing.assert_allclose(sol.v, 2.0, rtol=1e-12)

    @pytest.mark.parametrize("p,d", [(2.0, 3), (3.0, 2), (3.0, 3)])
    def test_fundamental_solution(self, p, d):
        prm = Params(p, d)
        lo, hi = 2.0, 30.0
        mu = lambda r: fundamental_solution(prm, r)
        sol = bvp_dirichlet(prm, Potential(), lo, hi, mu(lo), mu(hi))
        np.testing.assert_allclose(sol.v, mu(sol.grid), rtol=1e-8)

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.5])
    def test_fd_grid_convergence(self, p):
        prm = Params(p, 3)
        lam = 0.5 * hardy_constant(prm) - 0.1
        g = solve_gamma(lam, prm).gamma_plus
        errs = []
        for n in (256, 512, 1024):
            sol = bvp_dirichlet(prm, hardy(lam), 1.0, 10.0, 1.0, 10.0**g, method="fd", n=n)
            errs.append(np.max(np.abs(sol.v / sol.grid**g - 1)))
        assert errs[0] / errs[1] >= 2 and errs[1] / errs[2] >= 2

    @pytest.mark.parametrize("V", [hardy(0.05), shell_example(2.0, 3), Potential(shells=(Shell(1.0, 3.0, 2.0, 0.0),))])
    def test_shooting_matches_ivp(self, V):
        prm = Params(2.0, 3)
        sol = bvp_dirichlet(prm, V, 0.5, 5.0, 1.0, 0.7)
        again = ivp_solve(prm, V, 0.5, 1.0, float(sol.slope()[0]), 5.0)
        np.testing.assert_allclose(again.v, sol.v, rtol=1e-8)

    @pytest.mark.parametrize("V", [hardy(0.05), Potential(shells=(Shell(1.0, 3.0, 2.0, 0.0),)),
                                   Potential(shells=(Shell(0.0, 2.0, 1.0, -2.0),))])
    @pytest.mark.parametrize("a,b1,b2", [(1.0, 0.5, 0.6), (2.0, 1.0, 3.0), (0.3, 2.0, 2.2)])
    def test_comparison_principle(self, V, a, b1, b2):
        prm = Params(3.0, 2)
        low = bvp_dirichlet(prm, V, 0.5, 5.0, a, b1)
        high = bvp_dirichlet(prm, V, 0.5, 5.0, a, b2)
        assert np.all(high.v[1:] > low.v[1:])

    def test_no_positive_solution(self):
        prm = Params(2.0, 3)
        with pytest.raises(SolvabilityError):
            bvp_dirichlet(prm, hardy(5.0), 1.0, 1e6, 1.0, 1.0)

    def test_bad_data(self):
        with pytest.raises(DomainError):
            bvp_dirichlet(Params(2.0, 3), Potential(), 1.0, 2.0, 0.0, 1.0)


class TestExhaustion:
    @pytest.mark.parametrize("zeta", [0.0, math.inf])
    def test_hardy(self, zeta):
        prm = Params(2.5, 3)
        lam = 0.5 * hardy_constant(prm)
        pair = solve_gamma(lam, prm)
        res = minimal_growth_exhaustion(prm, hardy(lam), zeta)
        target = pair.gamma_minus if zeta == 0.0 else pair.gamma_plus
        assert res.converged and abs(res.exponent - target) < 1e-3
        assert res.solution(1.0) == pytest.approx(1.0, rel=1e-10)

    def test_free_case(self):
        prm = Params(2.0, 3)
        res = minimal_growth_exhaustion(prm, Potential(), 0.0)
        assert abs(res.exponent - (2.0 - 3) / 1.0) < 1e-3

    def test_quotient_of_exhaustion_pair(self):
        prm = Params(2.0, 3)
        lam = 0.1
        u = minimal_growth_exhaustion(prm, hardy(lam), 0.0).solution
        v = minimal_growth_exhaustion(prm, hardy(lam), math.inf).solution
        lo, hi = max(u.r_min, v.r_min), min(u.r_max, v.r_max)
        grid = log_grid(lo, hi)
        qp = quotient_profile(radial_from_values(grid, u(grid), prm), radial_from_values(grid, v(grid), prm), 0.0)
        assert qp.monotone_m
        assert qp.limit_class in ("zero", "finite", "infinite")


class TestClassify:
    grid = log_grid(1e-4, 1e4)

    @pytest.mark.parametrize("p,d,zeta", [(2.0, 3, 0.0), (1.5, 2, 0.0), (3.0, 2, math.inf), (4.0, 3, math.inf)])
    def test_fundamental_power(self, p, d, zeta):
        prm = Params(p, d)
        rep = classify_asymptotics(radial_from_values(self.grid, fundamental_solution(prm, self.grid), prm), zeta, prm)
        assert rep.klass == "power"
        assert abs(rep.exponent - (p - d) / (p - 1)) < 1e-4

    @pytest.mark.parametrize("zeta", [0.0, math.inf])
    def test_log(self, zeta):
        prm = Params(2.0, 2)
        v = -np.log(self.grid) if zeta == 0.0 else np.log(self.grid)
        assert classify_asymptotics(radial_from_values(self.grid, v, prm), zeta, prm).klass == "log"

    @pytest.mark.parametrize("zeta", [0.0, math.inf])
    def test_constant(self, zeta):
        prm = Params(2.0, 3)
        rep = classify_asymptotics(radial_from_values(self.grid, np.full_like(self.grid, 3.0), prm), zeta, prm)
        assert rep.klass == "bounded-limit" and rep.constant == pytest.approx(3.0)

    def test_removable_plus_power(self):
        # v = 2 + r^{1/2}, p > d: bounded limit 2 at the origin, power growth at infinity
        prm = Params(3.0, 2)
        sol = radial_from_values(self.grid, 2 + np.sqrt(self.grid), prm)
        at0 = classify_asymptotics(sol, 0.0, prm)
        atinf = classify_asymptotics(sol, math.inf, prm)
        assert at0.klass == "bounded-limit" and at0.constant == pytest.approx(2.0, rel=1e-6)
        assert atinf.klass == "power" and atinf.exponent == pytest.approx(0.5, abs=1e-4)

    def test_undetermined(self):
        prm = Params(2.0, 3)
        v = 2 + np.sin(8 * np.log(self.grid))
        assert classify_asymptotics(radial_from_values(self.grid, v, prm), 0.0, prm).klass == "undetermined"

    def test_short_data(self):
        prm = Params(2.0, 3)
        g = log_grid(1.0, 10.0)
        with pytest.raises(PreconditionError):
            classify_asymptotics(radial_from_values(g, g, prm), 0.0, prm)


class TestQuotient:
    grid = log_grid(1e-6, 1.0)
    prm = Params(2.0, 3)

    def test_exponent_gap(self):
        lam = 0.1
        _, u = power_solution(self.prm, lam, "minus", self.grid)
        _, v = power_solution(self.prm, lam, "plus", self.grid)
        assert quotient_profile(u, v, 0.0).limit_class == "infinite"
        assert quotient_profile(v, u, 0.0).limit_class == "zero"

    def test_identical_and_scaled(self):
        _, v = power_solution(self.prm, 0.1, "plus", self.grid)
        same = quotient_profile(v, v, 0.0)
        assert same.limit_class == "finite" and same.limit_value == pytest.approx(1.0)
        double = quotient_profile(radial_from_values(self.grid, 2 * v.v, self.prm), v, 0.0)
        assert double.limit_class == "finite" and double.limit_value == pytest.approx(2.0)
        np.testing.assert_array_equal(double.m, double.M)

    @given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(0.2, 5.0))
    def test_trichotomy(self, a, b, c):
        u = radial_from_values(self.grid, c * self.grid**a, self.prm)
        v = radial_from_values(self.grid, self.grid**b, self.prm)
        cls = quotient_profile(u, v, 0.0).limit_class
        if abs(a - b) < 1e-9:
            assert cls == "finite"
        elif abs(a - b) > 1e-2:
            assert cls == ("zero" if a > b else "infinite")
        else:
            assert cls in ("zero", "finite", "infinite")

    def test_m_not_above_M(self):
        _, u = power_solution(self.prm, 0.1, "minus", self.grid)
        qp = quotient_profile(u, radial_from_values(self.grid, 1 + self.grid, self.prm), 0.0)
        assert np.all(qp.m <= qp.M) and np.all(qp.m > 0)


class TestVeron:
    prm = Params(2.0, 3)
    grid = log_grid(1e-6, 1e2)

    def test_power_is_fixed(self):
        a = -1.0
        u = ivp_solve(self.prm, Potential(), 1.0, 1.0, a, 1e-3)
        w = veron_rescale(u, 0.1, a, grid=log_grid(0.02, 0.9))
        np.testing.assert_allclose(w.v, w.grid**a, rtol=1e-9)

    def test_identity(self):
        u = radial_from_values(self.grid, 1 + self.grid**-1.0, self.prm)
        w = veron_rescale(u, 1.0, -1.0)
        np.testing.assert_array_equal(w.v, u.v)
        np.testing.assert_array_equal(w.grid, u.grid)

    def test_converges_to_leading_term(self):
        # w_sigma = c sigma^{-alpha} + r^alpha on compacts: the error shrinks like sigma
        alpha, c = -1.0, 3.0
        u = radial_from_values(self.grid, c + self.grid**alpha, self.prm)
        compact = log_grid(0.5, 2.0, 64)
        errs = []
        for sigma in (1e-1, 1e-2, 1e-3):
            w = veron_rescale(u, sigma, alpha, grid=compact)
            errs.append(np.max(np.abs(w.v - compact**alpha)))
        np.testing.assert_allclose(errs, [c * 1e-1, c * 1e-2, c * 1e-3], rtol=1e-6)

    def test_domain(self):
        u = radial_from_values(self.grid, self.grid, self.prm)
        with pytest.raises(DomainError):
            veron_rescale(u, 1e-9, 1.0, grid=[0.5, 1.0])
        with pytest.raises(DomainError):
            veron_rescale(u, 0.0, 1.0)


class TestNonnegLimit:
    def test_constant(self):
        prm = Params(2.0, 3)
        g = log_grid(1e-6, 1.0)
        rep = nonneg_limit_check(radial_from_values(g, np.full_like(g, 4.0), prm), Potential(), 0.0)
        assert rep.limit_class == "finite" and rep.limit_estimate == pytest.approx(4.0)

    def test_growing_power(self):
        prm = Params(3.0, 2)
        g = log_grid(1.0, 1e8)
        u = radial_from_values(g, fundamental_solution(prm, g), prm)
        assert nonneg_limit_check(u, Potential(), math.inf).limit_class == "infinite"

    def test_shell_potential_oscillation_decays(self):
        prm = Params(3.0, 2)
        V = shell_example(3.0, 4)
        u = ivp_solve(prm, V, 1.0, 1.0, 0.0, 1e-12)
        rep = nonneg_limit_check(u, V, 0.0)
        assert rep.limit_class == "finite"
        osc = rep.relative_oscillation
        assert osc[-1] < 1e-3 * osc[0]
        assert np.all(np.diff(osc[-10:]) < 0)

    def test_negative_potential_rejected(self):
        prm = Params(2.0, 3)
        g = log_grid(1e-3, 1.0)
        with pytest.raises(PreconditionError):
            nonneg_limit_check(radial_from_values(g, g, prm), hardy(0.1), 0.0)


class TestHelpers:
    def test_eventually_monotone(self):
        assert eventually_monotone([5, 1, 2, 3, 4, 5, 6, 7])
        assert not eventually_monotone([1, 2, 1, 2, 1, 2, 1, 2])

    def test_dyadic_limit(self):
        k = np.arange(12)
        assert dyadic_limit(1 + 0.5**k) == ("finite", pytest.approx(1.0))
        assert dyadic_limit(0.5**k)[0] == "zero"
        assert dyadic_limit(1.5**k)[0] == "infinite"
        assert dyadic_limit(np.cos(k))[0] == "undetermined"
