"""The gamer distribution: a Pareto mixture of gamma laws for game scores.

X follows the gamer distribution with tail index r > 0, low-skill mean
c > 0, and shape alpha > 0 when its density is

    f(x) = r (c/alpha)^r exp(lgamma(alpha + r) - lgamma(alpha))
           x^{-r-1} P(alpha + r, alpha x / c),   x > 0,

with P the regularized lower incomplete gamma function.  Equivalently,
draw a mean score m from a Pareto law with minimum c and tail index r and
then X | m ~ Gamma(alpha, rate alpha/m).  The density decays like a power
law with exponent r at the top of the skill spectrum and looks like
Gamma(alpha, alpha/c) near zero.

The distribution function has the closed form (integrate the density by
parts once)

    F(x) = P(alpha, u) - (c/(alpha x))^r (Gamma(alpha+r)/Gamma(alpha))
           P(alpha + r, u),     u = alpha x / c,

which is what :func:`cdf` evaluates.  A direct quadrature of the density
is kept alongside as a slow cross-check (:func:`cdf_quadrature`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammainc, gammaln

from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class GamerParams:
    """Tail index r, low-skill mean score c, shape ("lives") alpha."""

    r: float
    c: float
    alpha: float

    def __post_init__(self):
        for name in ("r", "c", "alpha"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"gamer parameter {name} must be positive, got {v!r}")


def pdf(params: GamerParams, x):
    """Density at x > 0 (scalar or array)."""
    xv = np.asarray(x, dtype=float)
    if np.any(xv <= 0) or not np.all(np.isfinite(xv)):
        raise DomainError("gamer pdf requires x > 0")
    r, c, a = params.r, params.c, params.alpha
    lognorm = r * (np.log(c) - np.log(a)) + gammaln(a + r) - gammaln(a)
    with np.errstate(divide="ignore"):
        logp = np.log(gammainc(a + r, a * xv / c))
    out = r * np.exp(lognorm - (r + 1.0) * np.log(xv) + logp)
    return out if out.ndim else float(out)


def cdf(params: GamerParams, x):
    """Distribution function at x >= 0 (scalar or array), closed form."""
    xv = np.asarray(x, dtype=float)
    if np.any(xv < 0) or not np.all(np.isfinite(xv)):
        raise DomainError("gamer cdf requires x >= 0")
    r, c, a = params.r, params.c, params.alpha
    pos = xv > 0
    u = np.where(pos, a * xv / c, 1.0)
    with np.errstate(divide="ignore"):
        log_tail = (
            gammaln(a + r)
            - gammaln(a)
            + r * (np.log(c) - np.log(a) - np.log(np.where(pos, xv, 1.0)))
            + np.log(gammainc(a + r, u))
        )
    out = gammainc(a, u) - np.exp(log_tail)
    out = np.where(pos, np.clip(out, 0.0, 1.0), 0.0)
    return out if out.ndim else float(out)


def cdf_quadrature(params: GamerParams, x: float) -> float:
    """Adaptive quadrature of the density on (0, x]; slow reference path."""
    if x < 0 or not np.isfinite(x):
        raise DomainError("gamer cdf requires x >= 0")
    if x == 0:
        return 0.0
    val, _ = quad(lambda t: pdf(params, t), 0.0, x, epsabs=1e-10, limit=200)
    return float(min(max(val, 0.0), 1.0))


def sample(params: GamerParams, rng: np.random.Generator, size=None):
    """Draw scores via the Pareto-gamma mixture.

    m = c * (1 - U)^{-1/r} is Pareto(c, r); then X | m has a gamma law with
    shape alpha and mean m.
    """
    r, c, a = params.r, params.c, params.alpha
    u = rng.random(size)
    m = c * (1.0 - u) ** (-1.0 / r)
    return rng.standard_gamma(a, size=size) * (m / a)


def mean(params: GamerParams) -> float:
    """E[X] = c r / (r - 1) for r > 1, infinite otherwise."""
    if params.r <= 1:
        return float("inf")
    return params.c * params.r / (params.r - 1.0)


def discretize(params: GamerParams, L: int, cap: int | None = None) -> np.ndarray:
    """Cell probabilities for scores rounded to integers and capped at L - 1.

    p_0 = F(0.5) (support is positive, so no lower term), p_l =
    F(l + 0.5) - F(l - 0.5) for interior cells, and the cap cell absorbs
    the upper tail 1 - F(cap - 0.5).  Renormalized to unit sum; all
    entries are strictly positive because the density is.
    """
    if L < 2:
        raise ValidationError(f"discretize needs L >= 2, got {L}")
    if cap is None:
        cap = L - 1
    if cap != L - 1:
        raise ValidationError(f"cap must equal L - 1 = {L - 1}, got {cap}")
    F = cdf(params, np.arange(L - 1, dtype=float) + 0.5)
    p = np.empty(L)
    p[0] = F[0]
    p[1:-1] = np.diff(F)
    p[-1] = 1.0 - F[-1]
    if np.any(p <= 0):
        raise DomainError("discretized gamer cell with nonpositive mass")
    return p / p.sum()
