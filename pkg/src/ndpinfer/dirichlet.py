"""Numerically robust Dirichlet primitives on a finite state space.

The quantities here are the building blocks of everything else:

* ``log_mv_beta`` -- the log multivariate Beta function,
  log B(x) = sum_l log Gamma(x_l) - log Gamma(sum_l x_l).
* ``log_marginal_likelihood`` / ``marginal_likelihood`` -- the
  Dirichlet-multinomial marginal probability of a count vector under a
  Dir(eps * p) prior, B(eps*p + counts) / B(eps*p).
* ``sample_dirichlet`` -- simplex draws via normalized gamma variates.
* ``dirichlet_posterior_params`` -- the conjugate update eps*p + counts.

All likelihoods are computed and carried in log space; rows with up to a
hundred observations underflow double precision in linear space.  Linear
values are exposed for display only.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, ValidationError

# Tolerance for "sums to one" checks on probability vectors.
SIMPLEX_ATOL = 1e-12


def check_simplex(values, strict_positive: bool = False) -> np.ndarray:
    """Validate a probability vector and return it as a float array.

    Requires length >= 2, nonnegative entries (strictly positive when
    ``strict_positive``), and unit sum within ``SIMPLEX_ATOL``.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValidationError(f"simplex vector must be 1-d with length >= 2, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError("simplex vector has non-finite entries")
    if strict_positive:
        if np.any(v <= 0):
            raise DomainError("simplex vector must have strictly positive entries")
    elif np.any(v < 0):
        raise DomainError("simplex vector must have nonnegative entries")
    total = float(v.sum())
    if abs(total - 1.0) > SIMPLEX_ATOL:
        raise ValidationError(f"simplex vector sums to {total!r}, not 1 within {SIMPLEX_ATOL}")
    return v


def check_counts(counts, L: int | None = None) -> np.ndarray:
    """Validate a vector of nonnegative integer counts."""
    c = np.asarray(counts)
    if c.ndim != 1:
        raise ValidationError(f"count vector must be 1-d, got shape {c.shape}")
    if not np.issubdtype(c.dtype, np.integer):
        ci = np.asarray(counts, dtype=np.int64)
        if np.any(ci != np.asarray(counts)):
            raise ValidationError("count vector entries must be integers")
        c = ci
    if np.any(c < 0):
        raise ValidationError("count vector entries must be nonnegative")
    if L is not None and c.size != L:
        raise ValidationError(f"count vector has length {c.size}, expected {L}")
    return c.astype(np.int64)


def log_mv_beta(x) -> float:
    """log B(x) = sum_l log Gamma(x_l) - log Gamma(sum_l x_l), x_l > 0."""
    xv = np.asarray(x, dtype=float)
    if xv.ndim != 1 or xv.size < 1:
        raise ValidationError(f"log_mv_beta expects a 1-d vector, got shape {xv.shape}")
    if np.any(xv <= 0) or not np.all(np.isfinite(xv)):
        raise DomainError("log_mv_beta requires strictly positive, finite entries")
    return float(gammaln(xv).sum() - gammaln(xv.sum()))


def log_marginal_likelihood(counts, eps: float, p) -> float:
    """Log marginal probability of ``counts`` under a Dir(eps * p) row prior.

    Equals log B(eps*p + counts) - log B(eps*p).  Zero counts give exactly 0
    (probability one).
    """
    pv = check_simplex(p, strict_positive=True)
    c = check_counts(counts, pv.size)
    if not (np.isfinite(eps) and eps > 0):
        raise DomainError(f"eps must be a positive real, got {eps!r}")
    alpha = eps * pv
    if not c.any():
        return 0.0
    return log_mv_beta(alpha + c) - log_mv_beta(alpha)


def marginal_likelihood(counts, eps: float, p) -> float:
    """Linear-space marginal likelihood; in (0, 1].  For display and tests."""
    return float(np.exp(log_marginal_likelihood(counts, eps, p)))


def dirichlet_posterior_params(eps: float, p, counts) -> np.ndarray:
    """Conjugate posterior parameters eps*p + counts, componentwise."""
    pv = check_simplex(p, strict_positive=True)
    if not (np.isfinite(eps) and eps > 0):
        raise DomainError(f"eps must be a positive real, got {eps!r}")
    c = check_counts(counts, pv.size)
    return eps * pv + c


def sample_dirichlet(alpha, rng: np.random.Generator) -> np.ndarray:
    """One draw from Dir(alpha) via normalized gamma variates.

    Valid for arbitrarily small positive shapes (alpha entries well below 1
    occur routinely when eps * p_l is tiny).  Individual components may
    underflow to exactly 0.0; the vector as a whole always carries mass.
    """
    a = np.asarray(alpha, dtype=float)
    if a.ndim != 1 or a.size < 2:
        raise DomainError(f"Dirichlet parameter must be 1-d with length >= 2, got shape {a.shape}")
    if np.any(a <= 0) or not np.all(np.isfinite(a)):
        raise DomainError("Dirichlet parameters must be strictly positive and finite")
    g = rng.standard_gamma(a)
    total = g.sum()
    if not (total > 0):
        raise DomainError("all gamma variates underflowed; Dirichlet draw is degenerate")
    return g / total
