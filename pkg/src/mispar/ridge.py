"""Closed-form ridge (l2) risk curves and an independent spectral oracle.

The closed forms give normalized training/generalization error for any
penalty strength lam >= 0 in both specification regimes; the oracle
re-derives both quantities by averaging the exact eigenvalue sums against
the Marchenko-Pastur law, providing an independent cross-check of the
algebra at every (mu, lam) point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import ModelConfig, RiskPoint, effective_params, sigma_eff_sq
from .numerics import QuadratureSpec, integrate

__all__ = [
    "MPSupport",
    "mp_support",
    "mp_average",
    "risk_l2",
    "risk_l2_interp",
    "risk_l2_oracle",
    "ridge_risk",
]


@dataclass(frozen=True)
class MPSupport:
    """Support of the Marchenko-Pastur law at aspect ratio mu: bulk edges
    (1 +- sqrt(mu))^2 plus an atom at zero of mass 1 - 1/mu when mu > 1."""

    mu_minus: float
    mu_plus: float
    point_mass_at_zero: float


def mp_support(mu: float) -> MPSupport:
    if mu <= 0:
        raise ValueError(f"mp_support requires mu > 0, got {mu}")
    root = math.sqrt(mu)
    return MPSupport(
        mu_minus=(1.0 - root) ** 2,
        mu_plus=(1.0 + root) ** 2,
        point_mass_at_zero=max(0.0, 1.0 - 1.0 / mu),
    )


def mp_average(f: Callable, mu: float, alpha: float, panels: int = 512) -> float:
    """Average of f over the spectrum of the p x p Gram matrix of an
    m x p design with N(0, 1/n) entries, in the proportional limit.

    Eigenvalues concentrate on alpha * z with z Marchenko-Pastur(mu), plus
    an atom at zero of mass 1 - 1/mu when mu > 1:

        (1/p) sum f(lambda_i) = f(0) max(0, 1 - 1/mu)
            + (1/2pi) int_{mu-}^{mu+} sqrt((mu+ - z)(z - mu-)) / (mu z) f(alpha z) dz
    """
    sup = mp_support(mu)
    total = sup.point_mass_at_zero * float(f(0.0)) if sup.point_mass_at_zero > 0 else 0.0

    lo, hi = sup.mu_minus, sup.mu_plus

    def integrand(z):
        z = np.asarray(z, dtype=float)
        weight = np.sqrt(np.clip((hi - z) * (z - lo), 0.0, None)) / (mu * z)
        return weight * f(alpha * z)

    spec = QuadratureSpec(a=lo, b=hi, panels=panels, endpoint_weight="sqrt_both_ends")
    return total + integrate(integrand, spec) / (2.0 * math.pi)


def _check_normalization(cfg: ModelConfig) -> float:
    denom = cfg.sigma ** 2 + cfg.rho
    if denom <= 0.0:
        raise ValueError("risk normalization needs sigma^2 + rho > 0")
    return denom


def risk_l2(cfg: ModelConfig) -> RiskPoint:
    """Finite-penalty ridge risk from the closed-form expressions.

    Valid for lam > 0.  The underspecified expressions are evaluated with
    the effective (noise, sparsity) pair, which also realizes the
    overspecified case via the substitution sigma_eff^2 -> sigma^2,
    rho -> rho / (mu alpha).
    """
    if cfg.lam <= 0:
        raise ValueError("risk_l2 requires lam > 0; use risk_l2_interp at lam = 0")
    denom = _check_normalization(cfg)
    mu, alpha, lam = cfg.mu, cfg.alpha, cfg.lam
    s2, rp = effective_params(cfg)
    la = lam / alpha
    root = math.sqrt(mu)
    mu_m, mu_p = (1.0 - root) ** 2, (1.0 + root) ** 2
    big_a = math.sqrt((la + mu_p) * (la + mu_m))
    gap = abs(1.0 - mu)

    # training error, with the sigma_eff^2 prefactor multiplied through so
    # the sigma_eff = 0 corner stays finite
    te_brace = (
        s2 * (big_a - gap)
        - lam * lam * rp / alpha
        + (lam / (alpha * big_a)) * (rp * lam - s2) * (la + 1.0 + mu)
    )
    te = (s2 * max(0.0, 1.0 - mu) + 0.5 * te_brace) / denom

    ge_brace = (
        rp * alpha * (big_a - gap)
        + (s2 - lam * rp) * (la + 1.0 + mu) / big_a
        + s2
    )
    ge_atom = mu * alpha * rp * (1.0 - 1.0 / mu) if mu > 1.0 else 0.0
    ge = (ge_atom + 0.5 * ge_brace) / denom
    return RiskPoint(te=te, ge=ge)


def risk_l2_interp(cfg: ModelConfig) -> RiskPoint:
    """Ridge risk in the interpolating limit lam -> 0.

    Exactly at mu = 1 with positive effective noise the generalization
    error diverges; that point is reported as math.inf rather than a large
    float so downstream consumers can mask it.
    """
    if cfg.lam != 0:
        raise ValueError("risk_l2_interp requires lam = 0")
    denom = _check_normalization(cfg)
    mu, alpha = cfg.mu, cfg.alpha
    s2 = sigma_eff_sq(cfg)

    te = s2 * max(0.0, 1.0 - mu) / denom
    atom = min(mu * alpha, 1.0) * cfg.rho * (1.0 - 1.0 / mu) if mu > 1.0 else 0.0
    if mu == 1.0:
        ge = math.inf if s2 > 0.0 else 0.0
    elif mu < 1.0:
        ge = (atom + s2 / (1.0 - mu)) / denom
    else:
        ge = (atom + s2 * mu / (mu - 1.0)) / denom
    return RiskPoint(te=te, ge=ge)


def _oracle_panels(cfg: ModelConfig) -> int:
    # the integrand develops a sharp feature near the lower spectral edge
    # when lam/alpha is small or the edge approaches zero (mu near 1)
    la = cfg.lam / cfg.alpha
    if la < 1e-3:
        return 16384
    if la < 1e-1 or abs(cfg.mu - 1.0) < 0.2:
        return 4096
    return 512


def risk_l2_oracle(cfg: ModelConfig, panels: int | None = None) -> RiskPoint:
    """Ridge risk via Marchenko-Pastur averages of the exact eigenvalue
    sums (independent quadrature route used to certify `risk_l2`)."""
    if cfg.lam <= 0:
        raise ValueError("risk_l2_oracle requires lam > 0")
    denom = _check_normalization(cfg)
    mu, alpha, lam = cfg.mu, cfg.alpha, cfg.lam
    s2, rp = effective_params(cfg)
    if panels is None:
        panels = _oracle_panels(cfg)

    def te_sum(x):
        return (rp * x + s2) / (x + lam) ** 2

    def ge_sum(x):
        return (rp * lam * lam + s2 * x) / (lam + x) ** 2

    te = (s2 * (1.0 - mu) + mu * lam * lam * mp_average(te_sum, mu, alpha, panels)) / denom
    ge = (s2 + mu * alpha * mp_average(ge_sum, mu, alpha, panels)) / denom
    return RiskPoint(te=te, ge=ge)


def ridge_risk(cfg: ModelConfig) -> RiskPoint:
    """Dispatch on the penalty: closed forms for lam > 0, interpolating
    limit at lam = 0."""
    return risk_l2_interp(cfg) if cfg.lam == 0.0 else risk_l2(cfg)
