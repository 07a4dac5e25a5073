"""mispar: exact risk curves for misparametrized sparse regression.

Theory modules compute training/generalization error for l2- and
l1-penalized fits of a sparse generative model in the proportional limit,
including the interpolating limit, its overfitting singularity, and the
noise-free perfect-recovery phase boundaries.  A finite-size Monte-Carlo
simulator validates the curves, and a CLI drives parameter sweeps, phase
tables, and SVG figures.
"""

from .errors import (
    BracketFailure,
    DimensionError,
    MaxIterExceeded,
    MisparError,
    MissingColumn,
    NoConvergence,
    NonFiniteValue,
    NoSignChange,
    NoWindow,
    NumericalRankFailure,
)
from .lasso import (
    A_fun,
    B_fun,
    F1,
    F2,
    PhaseBoundary,
    RecoveryCurve,
    SelfConsistentState,
    alpha_c,
    lasso_risk,
    mu_c,
    mu_c_approx,
    risk_l1_interp,
    solve_l1_finite,
    zero_noise_branch,
)
from .model import (
    Instance,
    ModelConfig,
    Regime,
    RiskPoint,
    classify,
    effective_params,
    sample_instance,
    sigma_eff_sq,
)
from .numerics import Bracket, QuadratureSpec, brent_root, erf, erf_inv, erfc, integrate
from .ridge import (
    MPSupport,
    mp_average,
    mp_support,
    ridge_risk,
    risk_l2,
    risk_l2_interp,
    risk_l2_oracle,
)

__version__ = "0.1.0"
