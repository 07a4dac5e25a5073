"""Self-contained numeric kernels: special functions, bracketed root finding,
and quadrature that tolerates square-root endpoint behavior.

Everything here is a pure function, safe to call from concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special as _sp

from .errors import MaxIterExceeded, NonFiniteValue, NoSignChange

__all__ = [
    "Bracket",
    "QuadratureSpec",
    "erf",
    "erfc",
    "erf_inv",
    "brent_root",
    "integrate",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Bracket:
    """Search interval plus stopping rules for `brent_root`."""

    lo: float
    hi: float
    tol_abs: float = 1e-12
    tol_rel: float = 4.0 * _EPS
    max_iter: int = 200

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bracket requires lo < hi, got [{self.lo}, {self.hi}]")
        if self.tol_abs <= 0.0:
            raise ValueError("tol_abs must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class QuadratureSpec:
    """Fixed-panel integration domain.

    `sqrt_both_ends` flags an integrand that vanishes (or diverges) like a
    square root at either endpoint; integration then applies the substitution
    x = a + (b-a) sin^2(theta) before the composite rule.
    """

    a: float
    b: float
    panels: int = 512
    endpoint_weight: str = "none"  # "none" | "sqrt_both_ends"

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"domain requires a < b, got [{self.a}, {self.b}]")
        if self.panels < 8:
            raise ValueError("panels must be >= 8")
        if self.endpoint_weight not in ("none", "sqrt_both_ends"):
            raise ValueError(f"unknown endpoint_weight {self.endpoint_weight!r}")


def erf(x):
    """Error function; scalar in, scalar out (arrays pass through)."""
    if np.isscalar(x):
        return math.erf(x)
    return _sp.erf(np.asarray(x, dtype=float))


def erfc(x):
    """Complementary error function, 1 - erf(x), accurate for large x."""
    if np.isscalar(x):
        return math.erfc(x)
    return _sp.erfc(np.asarray(x, dtype=float))


def erf_inv(y: float) -> float:
    """Inverse of `erf` on (-1, 1)."""
    if not -1.0 < y < 1.0:
        raise ValueError(f"erf_inv requires |y| < 1, got {y}")
    return float(_sp.erfinv(y))


def brent_root(f: Callable[[float], float], bracket: Bracket) -> float:
    """Find a root of ``f`` inside ``bracket`` by Brent's method.

    Requires a sign change: f(lo) * f(hi) <= 0.  Stops when |f| <= tol_abs
    or when the bracketing interval has shrunk below tol_rel * |x| (plus a
    machine-precision floor).  Raises NoSignChange / MaxIterExceeded.
    """
    a, b = float(bracket.lo), float(bracket.hi)
    fa, fb = float(f(a)), float(f(b))
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise NoSignChange(
            f"f({a}) = {fa} and f({b}) = {fb} have the same sign"
        )

    c, fc = a, fa
    d = e = b - a
    for _ in range(bracket.max_iter):
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        # interval convergence uses tol_rel; |f| convergence uses tol_abs
        tol = 2.0 * _EPS * abs(b) + 0.5 * bracket.tol_rel * abs(b)
        m = 0.5 * (c - b)
        if abs(fb) <= bracket.tol_abs or abs(m) <= tol:
            return b
        if abs(e) < tol or abs(fa) <= abs(fb):
            d = e = m
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            else:
                p = -p
            s, e = e, d
            if 2.0 * p < 3.0 * m * q - abs(tol * q) and p < abs(0.5 * s * q):
                d = p / q
            else:
                d = e = m
        a, fa = b, fb
        b += d if abs(d) > tol else (tol if m > 0.0 else -tol)
        fb = float(f(b))
        if (fb > 0.0) == (fc > 0.0):
            c, fc = a, fa
            d = e = b - a
    raise MaxIterExceeded(
        f"no root to tolerance after {bracket.max_iter} iterations; "
        f"last x = {b}, f(x) = {fb}"
    )


def _eval_nodes(f, x: np.ndarray) -> np.ndarray:
    """Evaluate f on an array of nodes, accepting scalar-only callables."""
    try:
        y = np.asarray(f(x), dtype=float)
        if y.shape != x.shape:
            raise TypeError
    except (TypeError, ValueError):
        y = np.array([float(f(xi)) for xi in x])
    if not np.all(np.isfinite(y)):
        bad = x[~np.isfinite(y)][0]
        raise NonFiniteValue(f"integrand returned a non-finite value at x = {bad}")
    return y


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def integrate(f: Callable, spec: QuadratureSpec) -> float:
    """Fixed-panel quadrature of f over [spec.a, spec.b].

    endpoint_weight == "none": composite Simpson over 2 * panels intervals.
    endpoint_weight == "sqrt_both_ends": substitute x = a + (b-a) sin^2(theta)
    and apply composite 8-point Gauss-Legendre in theta.  The substitution
    turns sqrt(x - a) * sqrt(b - x) endpoint factors (vanishing or inverse)
    into smooth ones, and Gauss panels never sample the endpoints, where the
    raw integrand may diverge.
    """
    if spec.endpoint_weight == "none":
        n = 2 * spec.panels
        x = np.linspace(spec.a, spec.b, n + 1)
        y = _eval_nodes(f, x)
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        h = (spec.b - spec.a) / n
        return float(h / 3.0 * np.dot(w, y))

    edges = np.linspace(0.0, 0.5 * np.pi, spec.panels + 1)
    half = 0.5 * (edges[1] - edges[0])
    centers = 0.5 * (edges[:-1] + edges[1:])
    theta = (centers[:, None] + half * _GL_NODES[None, :]).ravel()
    weights = np.broadcast_to(half * _GL_WEIGHTS, (spec.panels, 8)).ravel()
    s = np.sin(theta)
    x = spec.a + (spec.b - spec.a) * s * s
    y = _eval_nodes(f, x) * (spec.b - spec.a) * np.sin(2.0 * theta)
    return float(np.dot(weights, y))
