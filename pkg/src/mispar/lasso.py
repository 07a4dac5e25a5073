"""Risk engine for l1-penalized (lasso) regression in the proportional limit.

The generalization error is alpha * sigma_xi^2 / (sigma^2 + rho), where
sigma_xi is the cavity-field standard deviation solving a three-unknown
self-consistent system in (tau, rho_hat, sigma_xi):

    rho_hat  = 1 - (1 - rho') Erf(tau/sqrt2) - rho' Erf(a/sqrt2)
    alpha s^2 = s2' + mu alpha s^2 [ (1 - rho') A(tau) + rho' B(tau, s) ]
    lam/alpha = tau s (1 - mu rho_hat)

with a = tau s / sqrt(1 + s^2) and (s2', rho') the regime-effective noise
and sparsity.  The interpolating limit lam -> 0 splits into closed-form and
reduced-system branches; the noise-free limit sigma = 0 adds a perfect
recovery window 1/alpha <= mu <= mu_c whose boundary is a Donoho-Tanner
style phase transition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import BracketFailure, NoConvergence, NoWindow
from .model import ModelConfig, RiskPoint, effective_params, sigma_eff_sq
from .numerics import Bracket, brent_root, erf_inv

__all__ = [
    "SelfConsistentState",
    "PhaseBoundary",
    "RecoveryCurve",
    "A_fun",
    "B_fun",
    "F1",
    "F2",
    "solve_l1_finite",
    "risk_l1_interp",
    "zero_noise_branch",
    "alpha_c",
    "mu_c",
    "mu_c_approx",
    "zero_noise_left_slope",
    "lasso_risk",
    "equation_residuals",
]

_SQRT2 = math.sqrt(2.0)
_SQRT_2_PI = math.sqrt(2.0 / math.pi)  # sqrt(2/pi)

BRANCH_FINITE = "finite_lambda"
BRANCH_BELOW_1 = "interp_mu_below_1"
BRANCH_ABOVE_1 = "interp_mu_above_1"
BRANCH_PERFECT = "zero_noise_perfect"
BRANCH_FAILED = "zero_noise_failed"


@dataclass(frozen=True)
class SelfConsistentState:
    """Solution of the self-consistent system plus the branch that produced
    it.  rho_hat is the asymptotic fraction of nonzero estimates."""

    tau: float
    rho_hat: float
    sigma_xi: float
    branch: str


@dataclass(frozen=True)
class PhaseBoundary:
    """Critical undersampling for noise-free recovery at sparsity rho."""

    rho: float
    tau_c: float
    alpha_c: float


@dataclass(frozen=True)
class RecoveryCurve:
    """Largest overparametrization preserving exact noise-free recovery."""

    rho_over_alpha: float
    mu_c: float
    tau_at_mc: float


# ---------------------------------------------------------------------------
# scalar building blocks
# ---------------------------------------------------------------------------

def A_fun(tau: float) -> float:
    """(1 + tau^2) Erfc(tau/sqrt2) - sqrt(2/pi) tau exp(-tau^2/2).

    Decreasing from 1 at tau = 0, asymptotically 2 sqrt(2/pi) e^{-t^2/2}/t^3.
    Evaluated through the scaled complement erfcx so the large-tau
    cancellation happens between O(1) quantities.
    """
    if tau < 0:
        raise ValueError("A_fun requires tau >= 0")
    core = (1.0 + tau * tau) * float(_sp.erfcx(tau / _SQRT2)) - _SQRT_2_PI * tau
    return math.exp(-0.5 * tau * tau) * core


def _soft_bracket(a: float) -> float:
    """sqrt(2/pi) a e^{-a^2/2} + (a^2 - 1) Erf(a/sqrt2), series-protected.

    The direct form loses all digits below a ~ 1e-4 (two O(a) terms cancel
    to O(a^3)); the series keeps full precision there.
    """
    if a < 0.08:
        a2 = a * a
        return _SQRT_2_PI * a * a2 * (
            2.0 / 3.0 + a2 * (-1.0 / 15.0 + a2 * (1.0 / 140.0 - a2 / 1512.0))
        )
    return _SQRT_2_PI * a * math.exp(-0.5 * a * a) + (a * a - 1.0) * math.erf(a / _SQRT2)


def B_fun(tau: float, sigma_xi: float) -> float:
    """Slab-coordinate variance factor; B(0, s) = 1, B -> 1/s^2 as tau grows,
    and B -> 1 + tau^2 as sigma_xi -> 0 at fixed tau."""
    if sigma_xi <= 0.0:
        raise ValueError("B_fun requires sigma_xi > 0; use the limit branches")
    s2 = sigma_xi * sigma_xi
    a = tau * sigma_xi / math.sqrt(1.0 + s2)
    c0 = 1.0 + 1.0 / s2
    return 1.0 + tau * tau - c0 * _soft_bracket(a) - 2.0 * math.erf(a / _SQRT2)


def F1(tau: float, rho: float) -> float:
    """1 - (1 - rho) Erf(tau/sqrt2): decreasing from 1 to rho."""
    return 1.0 - (1.0 - rho) * math.erf(tau / _SQRT2)


def F2(tau: float, rho: float) -> float:
    """(1 - rho) A(tau) + rho (1 + tau^2): positive with interior minimum."""
    return (1.0 - rho) * A_fun(tau) + rho * (1.0 + tau * tau)


def _ge(cfg: ModelConfig, sigma_xi: float) -> float:
    return cfg.alpha * sigma_xi * sigma_xi / (cfg.sigma ** 2 + cfg.rho)


# ---------------------------------------------------------------------------
# phase boundaries
# ---------------------------------------------------------------------------

def alpha_c(rho: float) -> PhaseBoundary:
    """Critical undersampling below which noise-free l1 recovery fails.

    tau_c solves F1 = F2 (equivalently, minimizes F2); alpha_c = F1(tau_c).
    """
    if not 0.0 < rho < 1.0:
        raise ValueError(f"alpha_c requires 0 < rho < 1, got {rho}")
    f = lambda t: F1(t, rho) - F2(t, rho)
    lo, hi = 1e-6, 40.0
    if f(lo) <= 0.0 or f(hi) >= 0.0:
        raise BracketFailure(f"no sign change for F1 - F2 on ({lo}, {hi}) at rho={rho}")
    tc = brent_root(f, Bracket(lo, hi, tol_abs=1e-14, tol_rel=1e-14))
    return PhaseBoundary(rho=rho, tau_c=tc, alpha_c=F1(tc, rho))


def mu_c(rho: float, alpha: float) -> RecoveryCurve:
    """Upper edge of the perfect-recovery window for sigma = 0, lam -> 0.

    Parametric solve: tau from
        rho/alpha = 1 - sqrt(pi/2) tau e^{tau^2/2} Erfc(tau/sqrt2),
    then
        mu_c = 1 + sqrt(pi/2) tau e^{tau^2/2} Erf(tau/sqrt2).
    This pair is algebraically equivalent to the implicit characterization
    1/mu_c = alpha_c(rho/(mu_c alpha)); the two routes agree to roundoff.
    """
    boundary = alpha_c(rho)
    if alpha <= boundary.alpha_c:
        raise NoWindow(
            f"alpha={alpha} <= alpha_c({rho})={boundary.alpha_c:.6f}: "
            "no perfect-recovery window"
        )
    target = rho / alpha
    # 1 - sqrt(pi/2) t erfcx(t/sqrt2) decreases from 1 to 0 in t
    f = lambda t: 1.0 - math.sqrt(math.pi / 2.0) * t * float(_sp.erfcx(t / _SQRT2)) - target
    tau = brent_root(f, Bracket(1e-9, 40.0, tol_abs=1e-15, tol_rel=1e-15))
    half_t2 = 0.5 * tau * tau
    if half_t2 > 700.0:
        value = math.inf
    else:
        value = 1.0 + math.sqrt(math.pi / 2.0) * tau * math.exp(half_t2) * math.erf(tau / _SQRT2)
    if value < 1.0 / alpha:
        raise NoWindow(f"window [1/alpha, mu_c] empty: mu_c={value} < 1/alpha={1/alpha}")
    return RecoveryCurve(rho_over_alpha=target, mu_c=value, tau_at_mc=tau)


def mu_c_approx(rho: float, alpha: float) -> float:
    """Small-rho/alpha closed approximation sqrt(pi a / 2 r) e^{a/2r}."""
    ratio = alpha / (2.0 * rho)
    if ratio > 700.0:
        return math.inf
    return math.sqrt(math.pi * ratio) * math.exp(ratio)


def zero_noise_left_slope(rho: float, alpha: float) -> float:
    """d GE / d(1/alpha - mu) as mu -> 1/alpha from below, for
    alpha_c < alpha < 1.

    With F1(tau0, rho) = alpha, the small-sigma_xi expansion gives
    sigma_xi^2 -> rho alpha dmu / (alpha - F2(tau0, rho)), hence
    GE = alpha sigma_xi^2 / rho = alpha^2 dmu / (alpha - F2(tau0, rho)).
    """
    tau0 = _SQRT2 * erf_inv((1.0 - alpha) / (1.0 - rho))
    return alpha * alpha / (alpha - F2(tau0, rho))


# ---------------------------------------------------------------------------
# nested solvers
# ---------------------------------------------------------------------------

def _scan_root(f, grid, what: str):
    """Locate a sign change of f on an increasing grid, then polish with
    Brent.  Takes the first + -> - (or - -> +) crossing from the left."""
    prev_x = grid[0]
    prev_f = f(prev_x)
    if prev_f == 0.0:
        return prev_x
    for x in grid[1:]:
        fx = f(x)
        if fx == 0.0:
            return x
        if prev_f * fx < 0.0:
            return brent_root(f, Bracket(prev_x, x, tol_abs=1e-14, tol_rel=1e-13))
        prev_x, prev_f = x, fx
    raise NoConvergence(
        f"{what}: no sign change on scan grid "
        f"[{grid[0]:.3e}, {grid[-1]:.3e}] (f at ends: {f(grid[0]):.3e}, {f(grid[-1]):.3e})"
    )


def _rho_hat(tau: float, sigma_xi: float, rp: float) -> float:
    a = tau * sigma_xi / math.sqrt(1.0 + sigma_xi * sigma_xi)
    val = 1.0 - (1.0 - rp) * math.erf(tau / _SQRT2) - rp * math.erf(a / _SQRT2)
    return min(1.0, max(0.0, val))  # clamp erf roundoff at saturation


def _tau_from_penalty(cfg: ModelConfig, sigma_xi: float, rp: float) -> float:
    """Solve tau sigma_xi (1 - mu rho_hat(tau)) = lam/alpha for tau at fixed
    sigma_xi (the finite-penalty inner solve)."""
    target = cfg.lam / cfg.alpha
    g = lambda t: t * sigma_xi * (1.0 - cfg.mu * _rho_hat(t, sigma_xi, rp)) - target

    # the root scales like target / sigma_xi when sigma_xi is tiny; tau may
    # legitimately be enormous there (erf saturates, nothing overflows)
    hi = max(40.0, target / max(sigma_xi, 1e-300))
    while g(hi) < 0.0:
        hi *= 4.0
        if hi > 1e15 * (1.0 + target / max(sigma_xi, 1e-300)):
            raise NoConvergence(
                f"tau bracket exhausted at hi={hi:.3e} for sigma_xi={sigma_xi:.3e}"
            )
    return brent_root(g, Bracket(0.0, hi, tol_abs=1e-14, tol_rel=1e-13))


def _tau_pinned(cfg: ModelConfig, sigma_xi: float, rp: float) -> float:
    """Solve rho_hat(tau) = 1/mu for tau at fixed sigma_xi (interpolating
    branches with mu > 1 pin the nonzero fraction to 1/mu)."""
    target = 1.0 - 1.0 / cfg.mu

    def g(t):
        a = t * sigma_xi / math.sqrt(1.0 + sigma_xi * sigma_xi)
        return (1.0 - rp) * math.erf(t / _SQRT2) + rp * math.erf(a / _SQRT2) - target

    hi = 40.0
    while g(hi) < 0.0:
        hi *= 4.0
        if hi > 1e12:
            raise NoConvergence(f"pinned tau bracket exhausted (sigma_xi={sigma_xi:.3e})")
    return brent_root(g, Bracket(0.0, hi, tol_abs=1e-15, tol_rel=1e-13))


def _variance_gap(cfg: ModelConfig, sigma_xi: float, tau: float, s2: float, rp: float) -> float:
    """Residual of the cavity variance equation at (tau, sigma_xi):
    s2 + mu alpha s^2 [(1-rho')A + rho'B] - alpha s^2."""
    s_sq = sigma_xi * sigma_xi
    mix = (1.0 - rp) * A_fun(tau) + rp * B_fun(tau, sigma_xi)
    return s2 + cfg.mu * cfg.alpha * s_sq * mix - cfg.alpha * s_sq


def _sigma_scan_grid(cfg: ModelConfig, s2: float) -> np.ndarray:
    scale = math.sqrt(max(s2, 1e-30) / cfg.alpha)
    scale = max(scale, 1e-8)
    hi = 1e3 * (scale + cfg.lam / cfg.alpha + 1.0)
    # extra resolution near mu = 1 where sigma_xi blows up like |1-mu|^-1/2
    if abs(cfg.mu - 1.0) > 1e-12:
        hi = max(hi, 1e2 * scale / math.sqrt(abs(cfg.mu - 1.0)))
    return np.geomspace(1e-10 * scale, hi, 240)


def solve_l1_finite(cfg: ModelConfig) -> SelfConsistentState:
    """Solve the full three-unknown system at finite penalty lam > 0.

    Nested bracketed solves: Brent on sigma_xi for the variance equation,
    with tau recovered from the penalty equation at each trial sigma_xi and
    rho_hat explicit given (tau, sigma_xi).
    """
    if cfg.lam <= 0:
        raise ValueError("solve_l1_finite requires lam > 0")
    s2, rp = effective_params(cfg)

    def gap(s):
        tau = _tau_from_penalty(cfg, s, rp)
        return _variance_gap(cfg, s, tau, s2, rp)

    s_star = _scan_root(gap, _sigma_scan_grid(cfg, s2), "finite-lambda sigma_xi solve")
    tau = _tau_from_penalty(cfg, s_star, rp)
    return SelfConsistentState(
        tau=tau, rho_hat=_rho_hat(tau, s_star, rp), sigma_xi=s_star, branch=BRANCH_FINITE
    )


def _solve_pinned(cfg: ModelConfig, s2: float, rp: float, branch: str) -> SelfConsistentState:
    """Interpolating-limit solve for mu > 1 with rho_hat pinned to 1/mu."""

    def gap(s):
        tau = _tau_pinned(cfg, s, rp)
        return _variance_gap(cfg, s, tau, s2, rp)

    s_star = _scan_root(gap, _sigma_scan_grid(cfg, s2), "interpolating sigma_xi solve")
    tau = _tau_pinned(cfg, s_star, rp)
    return SelfConsistentState(tau=tau, rho_hat=1.0 / cfg.mu, sigma_xi=s_star, branch=branch)


def risk_l1_interp(cfg: ModelConfig) -> tuple[RiskPoint, SelfConsistentState]:
    """Lasso risk in the interpolating limit lam -> 0.

    mu < 1 reduces to the closed ridge expression (the sparsity constraint
    is inactive); mu > 1 with positive effective noise pins rho_hat = 1/mu
    and solves the remaining two equations; the noise-free case dispatches
    to the phase analysis.  Exactly at mu = 1 with positive effective noise
    the error diverges (math.inf sentinel).
    """
    if cfg.lam != 0:
        raise ValueError("risk_l1_interp requires lam = 0")
    denom = cfg.sigma ** 2 + cfg.rho
    if denom <= 0:
        raise ValueError("risk normalization needs sigma^2 + rho > 0")
    s2_eff = sigma_eff_sq(cfg)

    if cfg.sigma == 0.0 and cfg.mu * cfg.alpha >= 1.0:
        return zero_noise_branch(cfg)

    if cfg.mu < 1.0:
        ge = s2_eff / (denom * (1.0 - cfg.mu))
        te = s2_eff * (1.0 - cfg.mu) / denom
        state = SelfConsistentState(
            tau=0.0,
            rho_hat=1.0,
            sigma_xi=math.sqrt(s2_eff / (cfg.alpha * (1.0 - cfg.mu))),
            branch=BRANCH_BELOW_1,
        )
        return RiskPoint(te=te, ge=ge), state

    if cfg.mu == 1.0:
        state = SelfConsistentState(tau=0.0, rho_hat=1.0, sigma_xi=math.inf, branch=BRANCH_BELOW_1)
        return RiskPoint(te=0.0, ge=math.inf), state

    s2, rp = effective_params(cfg)
    state = _solve_pinned(cfg, s2, rp, BRANCH_ABOVE_1)
    return RiskPoint(te=0.0, ge=_ge(cfg, state.sigma_xi)), state


def zero_noise_branch(cfg: ModelConfig) -> tuple[RiskPoint, SelfConsistentState]:
    """Noise-free interpolating limit (sigma = 0, lam = 0).

    Piecewise:
      * mu alpha < 1: unobserved coefficients act as noise; closed form for
        mu < 1, pinned solve for 1 < mu < 1/alpha.
      * mu alpha >= 1 and 1/mu >= alpha_c(rho/(mu alpha)): perfect recovery,
        GE = 0 exactly, with (tau, rho_hat) from the sigma_xi = 0 system on
        the branch above tau_c (the admissible root).
      * otherwise: recovery fails, sigma_xi > 0 from the pinned system.
    """
    if cfg.sigma != 0.0 or cfg.lam != 0.0:
        raise ValueError("zero_noise_branch requires sigma = 0 and lam = 0")
    mu, alpha, rho = cfg.mu, cfg.alpha, cfg.rho

    if mu * alpha < 1.0:
        # effective noise rho (1 - mu alpha) > 0: defer to the noisy branches
        if mu <= 1.0:
            return risk_l1_interp(cfg)
        s2 = rho * (1.0 - mu * alpha)
        state = _solve_pinned(cfg, s2, rho, BRANCH_ABOVE_1)
        return RiskPoint(te=0.0, ge=_ge(cfg, state.sigma_xi)), state

    r = rho / (mu * alpha)
    boundary = alpha_c(r)
    if 1.0 / mu >= boundary.alpha_c:
        # inside the recovery window: sigma_xi = 0, root of F2 = 1/mu above tau_c
        f = lambda t: F2(t, r) - 1.0 / mu
        hi = boundary.tau_c + 1.0
        while f(hi) < 0.0:
            hi *= 2.0
            if hi > 1e6:
                raise NoConvergence("upper root of F2 = 1/mu not bracketed")
        if f(boundary.tau_c) > 0.0:
            tau = boundary.tau_c  # tangency: window boundary alpha = alpha_c
        else:
            tau = brent_root(f, Bracket(boundary.tau_c, hi, tol_abs=1e-14, tol_rel=1e-13))
        rho_hat = F1(tau, r)
        state = SelfConsistentState(tau=tau, rho_hat=rho_hat, sigma_xi=0.0, branch=BRANCH_PERFECT)
        # noiseless and all true coefficients observed: the fit is exact
        return RiskPoint(te=0.0, ge=0.0), state

    state = _solve_pinned(cfg, 0.0, r, BRANCH_FAILED)
    return RiskPoint(te=0.0, ge=_ge(cfg, state.sigma_xi)), state


def lasso_risk(cfg: ModelConfig) -> tuple[RiskPoint, SelfConsistentState]:
    """Dispatch on the penalty.  Finite lam has no closed training-error
    expression; te is reported as nan there."""
    if cfg.lam == 0.0:
        return risk_l1_interp(cfg)
    state = solve_l1_finite(cfg)
    return RiskPoint(te=math.nan, ge=_ge(cfg, state.sigma_xi)), state


# ---------------------------------------------------------------------------
# re-substitution diagnostics
# ---------------------------------------------------------------------------

def equation_residuals(cfg: ModelConfig, state: SelfConsistentState) -> dict:
    """Residuals of the governing equations at a returned state (all should
    be <= 1e-9 in absolute value for solver-produced states)."""
    s2, rp = effective_params(cfg)
    tau, s = state.tau, state.sigma_xi
    out = {}
    if state.branch == BRANCH_PERFECT:
        r = cfg.rho / (cfg.mu * cfg.alpha)
        out["fraction"] = state.rho_hat - F1(tau, r)
        out["variance"] = F2(tau, r) - 1.0 / cfg.mu
        out["penalty"] = 0.0  # lam = 0 and sigma_xi = 0
        return out
    if not math.isfinite(s):
        return {"fraction": 0.0, "variance": 0.0, "penalty": 0.0}
    if s > 0.0:
        out["fraction"] = state.rho_hat - _rho_hat(tau, s, rp)
        out["variance"] = _variance_gap(cfg, s, tau, s2, rp)
    else:
        out["fraction"] = state.rho_hat - (1.0 - (1.0 - rp) * math.erf(tau / _SQRT2))
        out["variance"] = s2
    out["penalty"] = tau * s * (1.0 - cfg.mu * state.rho_hat) - cfg.lam / cfg.alpha
    return out
