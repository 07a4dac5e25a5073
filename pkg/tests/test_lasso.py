import math

import numpy as np
import pytest
from scipy import integrate as sint

from mispar.errors import NoWindow
from mispar.lasso import (
    A_fun,
    B_fun,
    F1,
    F2,
    alpha_c,
    equation_residuals,
    lasso_risk,
    mu_c,
    mu_c_approx,
    risk_l1_interp,
    solve_l1_finite,
    zero_noise_branch,
    zero_noise_left_slope,
)
from mispar.model import ModelConfig
from mispar.numerics import Bracket, brent_root
from mispar.ridge import risk_l2_interp

SQRT_2_PI = math.sqrt(2.0 / math.pi)


def cfg(alpha=0.8, mu=0.5, rho=0.2, sigma=0.1, lam=0.0):
    return ModelConfig(alpha=alpha, mu=mu, rho=rho, sigma=sigma, lam=lam)


def soft(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def quad_zero_part(tau):
    """Brute-force E[soft(z, tau)^2], z ~ N(0,1): the defining integral of A."""
    f = lambda z: soft(z, tau) ** 2 * math.exp(-z * z / 2) / math.sqrt(2 * math.pi)
    val, _ = sint.quad(f, -12, 12, limit=200)
    return val


def quad_slab_part(tau, s):
    """Brute-force E[(soft(b + xi, tau s) - b)^2], b ~ N(0,1), xi ~ N(0,s^2)."""
    lam = tau * s

    def inner(b):
        f = lambda x: (soft(b + x, lam) - b) ** 2 * math.exp(-x * x / (2 * s * s)) / (
            s * math.sqrt(2 * math.pi)
        )
        v, _ = sint.quad(f, -10 * s, 10 * s, limit=200)
        return v * math.exp(-b * b / 2) / math.sqrt(2 * math.pi)

    val, _ = sint.quad(inner, -10, 10, limit=200)
    return val


class TestAFun:
    def test_at_zero(self):
        assert A_fun(0.0) == pytest.approx(1.0, abs=1e-14)

    def test_vanishes(self):
        assert A_fun(8.0) < 1e-13

    def test_decreasing_unit_interval(self):
        taus = np.linspace(0.0, 6.0, 61)
        vals = [A_fun(float(t)) for t in taus]
        assert all(0.0 <= v <= 1.0 for v in vals)
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_against_quadrature_oracle(self):
        for tau in (0.3, 1.0, 2.0):
            assert A_fun(tau) == pytest.approx(quad_zero_part(tau), abs=1e-10)

    def test_tail_asymptote(self):
        # A(tau) ~ 2 sqrt(2/pi) e^{-tau^2/2} / tau^3, with a 1 - 6/tau^2
        # correction; the leading ratio is within 10% once tau >= 8
        ratios = []
        for tau in (8.0, 10.0):
            ratios.append(A_fun(tau) * tau**3 * math.exp(tau * tau / 2) / (2 * SQRT_2_PI))
            assert ratios[-1] == pytest.approx(1.0, abs=0.10)
        assert abs(ratios[1] - 1.0) < abs(ratios[0] - 1.0)


class TestBFun:
    def test_at_zero_tau(self):
        for s in (0.1, 1.0, 3.0):
            assert B_fun(0.0, s) == pytest.approx(1.0, abs=1e-14)

    def test_large_tau_limit(self):
        assert B_fun(8.0, 1.0) == pytest.approx(1.0, abs=1e-3)
        assert B_fun(12.0, 0.5) == pytest.approx(4.0, abs=4e-3)

    def test_small_sigma_limit(self):
        for tau in (0.5, 2.0):
            assert B_fun(tau, 1e-9) == pytest.approx(1.0 + tau * tau, rel=1e-6)

    def test_domain(self):
        with pytest.raises(ValueError):
            B_fun(1.0, 0.0)

    def test_against_quadrature_oracle(self):
        for tau, s in ((0.5, 0.7), (1.5, 0.4), (2.26, 0.52)):
            assert s * s * B_fun(tau, s) == pytest.approx(quad_slab_part(tau, s), abs=1e-8)

    def test_series_matches_extended_precision(self):
        # the cancellation-protected series must agree with the direct
        # formula evaluated in 80-bit precision across the switch region
        from mispar.lasso import _soft_bracket

        for a in (0.01, 0.04, 0.079):
            al = np.longdouble(a)
            direct = float(
                np.longdouble(SQRT_2_PI) * al * np.exp(-al * al / 2)
                + (al * al - 1) * np.longdouble(math.erf(a / math.sqrt(2)))
            )
            assert _soft_bracket(a) == pytest.approx(direct, rel=1e-9)


class TestFFunctions:
    def test_endpoints(self):
        for rho in (0.1, 0.5):
            assert F1(0.0, rho) == pytest.approx(1.0)
            assert F2(0.0, rho) == pytest.approx(1.0)
            assert F1(40.0, rho) == pytest.approx(rho, abs=1e-12)

    def test_crossing_is_minimizer(self):
        # the root of F1 = F2 coincides with the interior minimum of F2
        rho = 0.2
        tc = brent_root(lambda t: F1(t, rho) - F2(t, rho), Bracket(1e-6, 40.0, tol_abs=1e-14))
        taus = np.linspace(tc - 1e-3, tc + 1e-3, 5)
        vals = [F2(float(t), rho) for t in taus]
        tmin = taus[int(np.argmin(vals))]
        assert abs(tmin - tc) <= 1e-6 + 5e-4  # grid resolution dominates
        # derivative vanishes at the crossing
        h = 1e-6
        deriv = (F2(tc + h, rho) - F2(tc - h, rho)) / (2 * h)
        assert abs(deriv) <= 1e-6


class TestAlphaC:
    def test_golden_value(self):
        b = alpha_c(0.2)
        assert b.alpha_c == pytest.approx(0.5111296103730976, abs=1e-9)
        assert b.tau_c == pytest.approx(0.8615921124, abs=1e-6)

    def test_dual_computation(self):
        # direct minimization of F2 must land on the same critical alpha
        from scipy.optimize import minimize_scalar

        for rho in (0.1, 0.2, 0.4):
            b = alpha_c(rho)
            res = minimize_scalar(
                lambda t: F2(t, rho), bounds=(1e-9, 40.0), method="bounded",
                options={"xatol": 1e-12},
            )
            assert b.alpha_c == pytest.approx(F2(res.x, rho), abs=1e-6)

    def test_dense_limit(self):
        assert alpha_c(0.999).alpha_c > 0.999

    def test_monotone(self):
        assert alpha_c(0.1).alpha_c < alpha_c(0.2).alpha_c < alpha_c(0.4).alpha_c

    def test_domain(self):
        for rho in (0.0, 1.0):
            with pytest.raises(ValueError):
                alpha_c(rho)


class TestMuC:
    def test_reference_value(self):
        # dual-computation golden value: the parametric solve and the
        # implicit characterization 1/mu = alpha_c(rho/(mu alpha)) agree
        rc = mu_c(0.2, 0.8)
        assert rc.mu_c == pytest.approx(4.679578345979837, rel=1e-9)

    def test_against_implicit_route(self):
        for rho, alpha in ((0.2, 0.8), (0.1, 0.6), (0.05, 0.9)):
            rc = mu_c(rho, alpha)
            implicit = brent_root(
                lambda m: 1.0 / m - alpha_c(rho / (m * alpha)).alpha_c,
                Bracket(1.0 + 1e-6, 1e6, tol_abs=1e-13, tol_rel=1e-12),
            )
            assert rc.mu_c == pytest.approx(implicit, rel=1e-4)

    def test_closed_approximation(self):
        # sqrt(2 pi) e^2 at rho/alpha = 1/4
        val = mu_c_approx(0.2, 0.8)
        assert val == pytest.approx(math.sqrt(2 * math.pi) * math.exp(2.0), rel=1e-12)
        assert val == pytest.approx(18.52, rel=0.02)

    def test_exact_below_approximation(self):
        # the closed form overshoots: it drops O(1) terms in the tau solve
        for rho, alpha in ((0.2, 0.8), (0.08, 0.8)):
            assert mu_c(rho, alpha).mu_c < mu_c_approx(rho, alpha)

    def test_monotone_in_sparsity(self):
        vals = [mu_c(r, 0.8).mu_c for r in (0.1, 0.2, 0.3)]
        assert vals[0] > vals[1] > vals[2]
        assert all(v >= 1.0 for v in vals)

    def test_no_window(self):
        with pytest.raises(NoWindow):
            mu_c(0.5, 0.8)  # alpha_c(0.5) = 0.831 > 0.8


class TestFiniteLambda:
    def test_residuals_on_grid(self):
        worst = 0.0
        for mu in (0.3, 0.9, 1.0, 1.1, 2.5):
            for lam in (1e-4, 0.1, 10.0):
                c = cfg(mu=mu, lam=lam)
                st = solve_l1_finite(c)
                res = equation_residuals(c, st)
                worst = max(worst, max(abs(v) for v in res.values()))
                assert 0.0 <= st.rho_hat <= 1.0
        assert worst <= 1e-9

    def test_small_lam_matches_interp(self):
        c = cfg(mu=0.5, lam=1e-6)
        st = solve_l1_finite(c)
        ge = c.alpha * st.sigma_xi**2 / (c.sigma**2 + c.rho)
        assert ge == pytest.approx(risk_l1_interp(cfg(mu=0.5))[0].ge, abs=1e-3)

    def test_peakless_at_moderate_lam(self):
        ges = []
        for mu in np.linspace(0.8, 1.2, 11):
            c = cfg(mu=float(mu), lam=0.1)
            st = solve_l1_finite(c)
            ges.append(c.alpha * st.sigma_xi**2 / (c.sigma**2 + c.rho))
        assert all(math.isfinite(g) for g in ges)
        assert max(ges) < 1.0

    def test_dense_signal_no_l1_benefit(self):
        c = cfg(mu=0.5, rho=1.0, lam=1e-6)
        st = solve_l1_finite(c)
        ge1 = c.alpha * st.sigma_xi**2 / (c.sigma**2 + c.rho)
        ge2 = risk_l2_interp(cfg(mu=0.5, rho=1.0)).ge
        assert ge1 >= ge2 - 1e-3

    def test_precondition(self):
        with pytest.raises(ValueError):
            solve_l1_finite(cfg(lam=0.0))


class TestInterpolatingLimit:
    def test_below_one_equals_ridge(self):
        for mu in np.arange(0.1, 0.95, 0.1):
            pt, st = risk_l1_interp(cfg(mu=float(mu)))
            assert pt.ge == pytest.approx(risk_l2_interp(cfg(mu=float(mu))).ge, abs=1e-12)
            assert st.branch == "interp_mu_below_1"
            assert st.rho_hat == 1.0

    def test_divergence_sentinel(self):
        pt, _ = risk_l1_interp(cfg(mu=1.0))
        assert math.isinf(pt.ge)

    def test_noise_peak_shape_above_one(self):
        # GE (mu - 1) / sigma_eff^2 -> 1 / (sigma^2 + rho) as mu -> 1+
        c = cfg(mu=1.01)
        pt, _ = risk_l1_interp(c)
        s2_eff = c.sigma**2 + c.rho * (1 - c.mu * c.alpha)
        predicted = s2_eff / ((c.sigma**2 + c.rho) * (c.mu - 1.0))
        assert pt.ge == pytest.approx(predicted, rel=0.05)

    def test_huge_mu_saturates_slowly(self):
        # the approach to 1 is logarithmic; check the trend and a loose band
        ge6 = risk_l1_interp(cfg(mu=1e6))[0].ge
        ge12 = risk_l1_interp(cfg(mu=1e12))[0].ge
        assert ge6 == pytest.approx(1.0, abs=0.05)
        assert ge12 == pytest.approx(1.0, abs=0.05)

    def test_sparse_low_noise_plateau(self):
        # deep in 1 << log(mu) << 1/sigma^2, 1/rho the error sits near
        # sigma^2 / (sigma^2 + rho); approach is logarithmically slow
        near = risk_l1_interp(cfg(rho=0.02, sigma=math.sqrt(1e-3), mu=math.e**5))[0].ge
        deep = risk_l1_interp(cfg(rho=0.002, sigma=math.sqrt(1e-4), mu=math.e**7))[0].ge
        assert deep / (1e-4 / (1e-4 + 0.002)) == pytest.approx(1.0, abs=0.30)
        assert deep / (1e-4 / (1e-4 + 0.002)) < near / (1e-3 / (1e-3 + 0.02))

    def test_residuals_above_one(self):
        for mu in (1.2, 2.0, 40.0):
            c = cfg(mu=mu)
            pt, st = risk_l1_interp(c)
            res = equation_residuals(c, st)
            assert max(abs(v) for v in res.values()) <= 1e-9
            assert st.branch == "interp_mu_above_1"
            assert st.rho_hat == pytest.approx(1.0 / mu)

    def test_boundary_continuity(self):
        lo = risk_l1_interp(cfg(mu=1.25 - 1e-9))[0].ge
        hi = risk_l1_interp(cfg(mu=1.25 + 1e-9))[0].ge
        assert lo == pytest.approx(hi, abs=1e-6)

    def test_sparsity_helps_beyond_the_peak(self):
        # l1 never exceeds l2 once clear of the interpolation peak; the
        # small excess just above mu = 1 is real and stays below 10%
        for mu in np.linspace(1.02, 6.0, 40):
            for rho in (0.05, 0.2, 0.6):
                g1 = risk_l1_interp(cfg(mu=float(mu), rho=rho))[0].ge
                g2 = risk_l2_interp(cfg(mu=float(mu), rho=rho)).ge
                if mu >= 1.25:
                    assert g1 <= g2 + 1e-9
                else:
                    assert g1 <= 1.10 * g2


class TestZeroNoise:
    def test_window_is_exact(self):
        for mu in (1.5, 3.0, 4.5):
            pt, st = zero_noise_branch(cfg(mu=mu, sigma=0.0))
            assert pt.ge == 0.0
            assert st.branch == "zero_noise_perfect"
            assert st.sigma_xi == 0.0
            assert st.rho_hat <= 1.0 / mu + 1e-12

    def test_oversampled_window(self):
        pt, st = zero_noise_branch(cfg(alpha=2.0, mu=0.7, sigma=0.0))
        assert pt.ge == 0.0

    def test_failed_recovery(self):
        for mu in (5.0, 10.0, 25.0):
            c = cfg(mu=mu, sigma=0.0)
            pt, st = zero_noise_branch(c)
            assert pt.ge > 0.0
            assert st.branch == "zero_noise_failed"
            assert max(abs(v) for v in equation_residuals(c, st).values()) <= 1e-9

    def test_below_window_effective_noise(self):
        # alpha < 1, mu < 1: unobserved coefficients act as noise
        pt, _ = zero_noise_branch(cfg(mu=0.5, sigma=0.0))
        assert pt.ge == pytest.approx((1 - 0.4) / (1 - 0.5), abs=1e-12)

    def test_quadratic_rise_above_mu_c(self):
        muc = mu_c(0.2, 0.8).mu_c
        dmus = np.geomspace(1e-3, 1e-1, 7)
        ge = [zero_noise_branch(cfg(mu=muc + float(d), sigma=0.0))[0].ge for d in dmus]
        slope = np.polyfit(np.log(dmus), np.log(ge), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.1)

    def test_left_slope_constant(self):
        slope = zero_noise_left_slope(0.2, 0.8)
        for dmu in (1e-4, 1e-5):
            ge = zero_noise_branch(cfg(mu=1 / 0.8 - dmu, sigma=0.0))[0].ge
            assert ge / (slope * dmu) == pytest.approx(1.0, abs=0.02)

    def test_two_thirds_power_at_critical_alpha(self):
        ac = alpha_c(0.2).alpha_c
        dmus = np.geomspace(1e-5, 1e-3, 7)
        ge = [
            zero_noise_branch(ModelConfig(ac, 1 / ac - float(d), 0.2, 0.0, 0.0))[0].ge
            for d in dmus
        ]
        slope = np.polyfit(np.log(dmus), np.log(ge), 1)[0]
        assert slope == pytest.approx(2.0 / 3.0, abs=0.03)

    def test_support_fraction_jumps(self):
        below = zero_noise_branch(cfg(mu=1 / 0.8 - 1e-6, sigma=0.0))[1]
        above = zero_noise_branch(cfg(mu=1 / 0.8 + 1e-6, sigma=0.0))[1]
        assert below.rho_hat == pytest.approx(0.8, abs=1e-4)
        assert above.rho_hat < 0.5  # discontinuous drop

    def test_admissibility_invariant(self):
        for mu in (0.5, 1.5, 3.0, 5.0, 10.0):
            _, st = zero_noise_branch(cfg(mu=mu, sigma=0.0))
            assert mu * st.rho_hat <= 1.0 + 1e-12


class TestDispatcher:
    def test_finite_lambda_route(self):
        pt, st = lasso_risk(cfg(mu=0.5, lam=0.1))
        assert st.branch == "finite_lambda"
        assert math.isnan(pt.te)

    def test_interp_route(self):
        pt, st = lasso_risk(cfg(mu=2.0, lam=0.0))
        assert st.branch == "interp_mu_above_1"
        assert pt.te == 0.0
