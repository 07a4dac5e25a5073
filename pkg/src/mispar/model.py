"""Generative and inference model definitions.

The data-generating process draws a length-n coefficient vector from a
spike-and-slab prior (nonzero with probability rho, slab N(0,1)), a Gaussian
design with entry variance 1/n, and additive N(0, sigma^2) measurement noise.
The fitting model sees p = round(mu * m) columns: a truncation of the true
design when p < n, or the true design augmented with effect-free columns when
p > n.  Five dimensionless knobs control everything:

    alpha = m/n   measurements per generative parameter (undersampling)
    mu    = p/m   fitting parameters per measurement (overparametrization)
    rho           probability a generative coefficient is nonzero
    sigma         measurement noise standard deviation
    lam           penalty strength; lam = 0 means the interpolating limit
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

__all__ = [
    "ModelConfig",
    "Regime",
    "Instance",
    "RiskPoint",
    "classify",
    "sigma_eff_sq",
    "effective_params",
    "sample_instance",
]


@dataclass(frozen=True)
class ModelConfig:
    alpha: float
    mu: float
    rho: float
    sigma: float
    lam: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.mu >= 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0, 1], got {self.rho}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not self.lam >= 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")

    @property
    def interpolating(self) -> bool:
        return self.lam == 0.0

    def with_(self, **kw) -> "ModelConfig":
        """Copy with selected fields replaced."""
        d = dict(alpha=self.alpha, mu=self.mu, rho=self.rho,
                 sigma=self.sigma, lam=self.lam)
        d.update(kw)
        return ModelConfig(**d)


@dataclass(frozen=True)
class Regime:
    """Which side of the two structural thresholds a config sits on.

    specification: "underspecified" iff mu * alpha <= 1 (p <= n);
    parametrization: "under" iff mu <= 1 (p <= m).  Greater-or-equal
    boundaries belong to both sides; formulas agree there.
    """

    specification: str
    parametrization: str


@dataclass(frozen=True)
class RiskPoint:
    """Normalized training / generalization error; either may be math.inf
    exactly at the interpolation singularity (mu = 1, lam = 0, positive
    effective noise)."""

    te: float
    ge: float

    @property
    def divergent(self) -> bool:
        return math.isinf(self.te) or math.isinf(self.ge)


@dataclass(frozen=True)
class Instance:
    """One finite-size draw of the generative model plus fitting design."""

    n: int
    m: int
    p: int
    design: np.ndarray  # m x max(n, p); fitting uses the first p columns
    beta: np.ndarray    # length n
    noise: np.ndarray   # length m
    y: np.ndarray       # length m

    @property
    def fit_design(self) -> np.ndarray:
        return self.design[:, : self.p]


def classify(cfg: ModelConfig) -> Regime:
    """Regime of a configuration; boundaries report the closed side."""
    spec = "underspecified" if cfg.mu * cfg.alpha <= 1.0 else "overspecified"
    par = "under" if cfg.mu <= 1.0 else "over"
    return Regime(specification=spec, parametrization=par)


def sigma_eff_sq(cfg: ModelConfig) -> float:
    """Effective noise variance: unobserved nonzero coefficients act as
    additional noise when p < n."""
    gap = 1.0 - cfg.mu * cfg.alpha
    return cfg.sigma ** 2 + cfg.rho * gap if gap > 0.0 else cfg.sigma ** 2


def effective_params(cfg: ModelConfig) -> tuple[float, float]:
    """(noise variance, sparsity) pair entering the risk formulas.

    Underspecified: (sigma_eff^2, rho).  Overspecified: the extra effect-free
    columns dilute the sparsity instead, (sigma^2, rho / (mu * alpha)).
    Continuous across mu * alpha = 1.
    """
    if cfg.mu * cfg.alpha <= 0:
        raise ValueError("effective_params requires mu * alpha > 0")
    if cfg.mu * cfg.alpha <= 1.0:
        return sigma_eff_sq(cfg), cfg.rho
    return cfg.sigma ** 2, cfg.rho / (cfg.mu * cfg.alpha)


def instance_dims(cfg: ModelConfig, n: int) -> tuple[int, int]:
    """(m, p) for a finite-size instance: m = round(alpha n), p = round(mu m)."""
    m = int(round(cfg.alpha * n))
    p = int(round(cfg.mu * m))
    return m, p


def sample_instance(cfg: ModelConfig, n: int, seed) -> Instance:
    """Draw one reproducible instance.

    `seed` may be an int or a sequence of ints; identical seeds give bitwise
    identical instances.  Columns beyond n (present only when p > n) are
    i.i.d. N(0, 1/n) like the rest of the design; y uses only the first n.
    """
    if n < 10:
        raise ValueError(f"n must be >= 10, got {n}")
    m, p = instance_dims(cfg, n)
    if m < 1 or p < 1:
        raise DimensionError(f"degenerate dimensions m={m} p={p} for n={n}")
    rng = np.random.default_rng(seed)
    width = max(n, p)
    design = rng.normal(0.0, 1.0 / math.sqrt(n), size=(m, width))
    mask = rng.random(n) < cfg.rho
    beta = np.where(mask, rng.normal(0.0, 1.0, size=n), 0.0)
    noise = rng.normal(0.0, cfg.sigma, size=m) if cfg.sigma > 0 else np.zeros(m)
    y = design[:, :n] @ beta + noise
    return Instance(n=n, m=m, p=p, design=design, beta=beta, noise=noise, y=y)
