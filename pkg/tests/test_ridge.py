import math

import numpy as np
import pytest

from mispar.model import ModelConfig, sigma_eff_sq
from mispar.ridge import (
    mp_average,
    mp_support,
    ridge_risk,
    risk_l2,
    risk_l2_interp,
    risk_l2_oracle,
)


def cfg(alpha=0.8, mu=0.5, rho=0.2, sigma=0.1, lam=0.0):
    return ModelConfig(alpha=alpha, mu=mu, rho=rho, sigma=sigma, lam=lam)


class TestMPSupport:
    def test_edges(self):
        sup = mp_support(0.25)
        assert sup.mu_minus == pytest.approx(0.25)
        assert sup.mu_plus == pytest.approx(2.25)
        assert sup.point_mass_at_zero == 0.0

    def test_atom(self):
        assert mp_support(4.0).point_mass_at_zero == pytest.approx(0.75)


class TestMPAverage:
    def test_total_mass(self):
        for mu in (0.3, 1.0, 2.0, 4.0):
            val = mp_average(lambda x: np.ones_like(np.asarray(x)), mu, 0.8)
            assert val == pytest.approx(1.0, abs=1e-12)

    def test_mean_identity(self):
        # E[eigenvalue] = alpha for the 1/n-variance design convention
        val = mp_average(lambda x: x, 1.0, 1.0, panels=2048)
        assert val == pytest.approx(1.0, abs=1e-10)

    def test_mean_against_sampled_wishart(self):
        n = 2000
        rng = np.random.default_rng(99)
        for mu, alpha in ((0.5, 1.0), (2.0, 0.5)):
            m = int(round(alpha * n))
            p = int(round(mu * m))
            x = rng.normal(0.0, 1.0 / math.sqrt(n), size=(m, p))
            eig = np.linalg.eigvalsh(x.T @ x)
            f = lambda z: z * z
            sample = float(np.mean(f(eig)))
            theory = mp_average(f, mu, alpha, panels=2048)
            assert sample == pytest.approx(theory, rel=0.05)


class TestClosedFormVsOracle:
    def test_spot_grid(self):
        for mu in (0.3, 0.9, 1.0, 1.1, 2.5):
            for lam in (1e-3, 0.1, 10.0):
                c = cfg(mu=mu, lam=lam)
                a, b = risk_l2(c), risk_l2_oracle(c)
                assert a.te == pytest.approx(b.te, abs=1e-9)
                assert a.ge == pytest.approx(b.ge, abs=1e-9)

    def test_heavy_penalty_limit(self):
        for mu in (0.5, 2.0):
            pt = risk_l2(cfg(mu=mu, lam=1e6))
            assert pt.te == pytest.approx(1.0, abs=1e-3)
            assert pt.ge == pytest.approx(1.0, abs=1e-3)
            orc = risk_l2_oracle(cfg(mu=mu, lam=1e6))
            assert orc.te == pytest.approx(1.0, abs=1e-3)
            assert orc.ge == pytest.approx(1.0, abs=1e-3)

    def test_no_divergence_at_mu_one_finite_lam(self):
        pt = risk_l2(cfg(mu=1.0, lam=0.1))
        assert math.isfinite(pt.ge) and pt.ge < 1.0

    def test_oracle_small_mu(self):
        c = cfg(mu=1e-4, lam=0.01)
        pt = risk_l2_oracle(c)
        expect = sigma_eff_sq(c) / (c.sigma**2 + c.rho)
        assert pt.ge == pytest.approx(expect, abs=1e-3)


class TestInterpolatingLimit:
    def test_reference_point(self):
        pt = risk_l2_interp(cfg(alpha=0.8, mu=0.5, rho=0.2, sigma=0.1))
        assert pt.ge == pytest.approx(0.13 / (0.21 * 0.5), abs=1e-12)
        assert pt.te == pytest.approx(0.13 * 0.5 / 0.21, abs=1e-12)

    def test_divergence_sentinel(self):
        pt = risk_l2_interp(cfg(mu=1.0))
        assert pt.te == 0.0
        assert math.isinf(pt.ge)

    def test_zero_noise_window(self):
        assert risk_l2_interp(cfg(alpha=2.0, mu=0.7, sigma=0.0)).ge == 0.0

    def test_zero_noise_overspecified(self):
        assert risk_l2_interp(cfg(alpha=0.8, mu=2.0, sigma=0.0)).ge == pytest.approx(0.5)

    def test_large_mu_saturation(self):
        assert risk_l2_interp(cfg(mu=1e9)).ge == pytest.approx(1.0, abs=1e-6)

    def test_interpolation_te_zero(self):
        for mu in (1.0, 1.5, 3.0):
            assert risk_l2_interp(cfg(mu=mu)).te == 0.0

    def test_matches_small_lam(self):
        for mu in np.linspace(0.1, 3.0, 25):
            if abs(mu - 1.0) < 0.05:
                continue
            c0 = cfg(mu=float(mu))
            pt0 = risk_l2_interp(c0)
            pt = risk_l2(c0.with_(lam=1e-8))
            assert pt.ge == pytest.approx(pt0.ge, abs=1e-4)
            assert pt.te == pytest.approx(pt0.te, abs=1e-4)

    def test_regime_continuity_exact(self):
        # mu * alpha = 1 boundary: both substitution rules coincide
        lo = risk_l2(cfg(alpha=0.8, mu=1.25 - 1e-13, lam=0.3))
        hi = risk_l2(cfg(alpha=0.8, mu=1.25 + 1e-13, lam=0.3))
        assert lo.te == pytest.approx(hi.te, abs=1e-12)
        assert lo.ge == pytest.approx(hi.ge, abs=1e-12)


class TestPeakScaling:
    def test_product_tends_to_constant(self):
        c = lambda mu: cfg(alpha=0.6, mu=mu, rho=0.05)
        right = [risk_l2_interp(c(1 + d)).ge * d for d in (1e-4, 1e-5, 1e-6)]
        left = [risk_l2_interp(c(1 - d)).ge * d for d in (1e-4, 1e-5, 1e-6)]
        assert right[-1] == pytest.approx(right[-2], rel=1e-3)
        assert left[-1] == pytest.approx(left[-2], rel=1e-3)

    def test_exponent_fit(self):
        mus = np.linspace(1.01, 1.2, 12)
        x = [math.log(m - 1.0) for m in mus]
        y = [math.log(risk_l2_interp(cfg(alpha=0.6, mu=float(m), rho=0.05)).ge) for m in mus]
        slope = np.polyfit(x, y, 1)[0]
        assert slope == pytest.approx(-1.0, abs=0.02)


class TestMonotonicity:
    def test_te_nondecreasing_in_lam(self):
        for mu in (0.5, 1.5, 3.0):
            lams = np.geomspace(1e-4, 1e3, 25)
            te = [risk_l2(cfg(mu=mu, lam=float(l))).te for l in lams]
            assert np.all(np.diff(te) >= -1e-12)


class TestDispatcher:
    def test_routes(self):
        assert math.isinf(ridge_risk(cfg(mu=1.0, lam=0.0)).ge)
        assert math.isfinite(ridge_risk(cfg(mu=1.0, lam=0.1)).ge)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            risk_l2(cfg(lam=0.0))
        with pytest.raises(ValueError):
            risk_l2_interp(cfg(lam=0.1))
