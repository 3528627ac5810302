"""Generalized Pareto distribution: evaluation, inversion, moments, sampling.

The two-parameter GPD with scale ``sigma`` and shape ``xi`` has distribution
function ``F(x) = 1 - (1 + xi*x/sigma)**(-1/xi)`` on ``[0, inf)`` for
``xi >= 0`` and on ``[0, -sigma/xi]`` for ``xi < 0``.  At ``xi = 0`` it
degenerates to the exponential distribution and all formulas below switch to
their exponential limits; a second-order series bridges the band of tiny
``|xi|`` where the direct expressions lose precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# |xi| below this is treated as exactly zero (exponential limit)
XI_ZERO_TOL = 1e-8
# second-order series in xi is used for XI_ZERO_TOL <= |xi| < XI_SERIES_BAND
XI_SERIES_BAND = 1e-4


@dataclass(frozen=True)
class GpdParams:
    """Scale/shape parameter pair of the tail model."""

    sigma: float
    xi: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValidationError(f"sigma must be a positive finite real, got {self.sigma}")
        if not math.isfinite(self.xi):
            raise ValidationError(f"xi must be finite, got {self.xi}")

    @property
    def support_upper(self) -> float:
        """Upper endpoint of the support (inf for xi >= 0)."""
        if self.xi < 0.0:
            return -self.sigma / self.xi
        return math.inf


@dataclass(frozen=True)
class ConfidenceLevel:
    """Probability level in the open interval (0, 1)."""

    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and 0.0 < self.alpha < 1.0):
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")


def _scaled_expm1(xi: float, t) -> np.ndarray | float:
    """(exp(xi*t) - 1)/xi with the xi -> 0 limit t; t may be an array."""
    if abs(xi) < XI_ZERO_TOL:
        return t
    if abs(xi) < XI_SERIES_BAND:
        return t * (1.0 + 0.5 * xi * t + (xi * t) ** 2 / 6.0)
    return np.expm1(xi * np.asarray(t, dtype=float)) / xi


def _log1p_over_xi(xi: float, s) -> np.ndarray | float:
    """log(1 + xi*s)/xi with the xi -> 0 limit s; s may be an array."""
    if abs(xi) < XI_ZERO_TOL:
        return s
    if abs(xi) < XI_SERIES_BAND:
        return s * (1.0 - 0.5 * xi * s + (xi * s) ** 2 / 3.0)
    return np.log1p(xi * np.asarray(s, dtype=float)) / xi


def cdf(p: GpdParams, x):
    """Distribution function; clamps to 0 below and 1 above the support."""
    x = np.asarray(x, dtype=float)
    # evaluate only strictly inside the support so 1 + xi*s stays positive
    inside = (x >= 0.0) & (x < p.support_upper)
    s = np.where(inside, x, 0.0) / p.sigma
    val = -np.expm1(-_log1p_over_xi(p.xi, s))
    out = np.where(x < 0.0, 0.0, np.where(inside, val, 1.0))
    return float(out) if out.ndim == 0 else out


def pdf(p: GpdParams, x):
    """Density function; zero outside the support."""
    x = np.asarray(x, dtype=float)
    inside = (x >= 0.0) & (x < p.support_upper)
    s = np.where(inside, x, 0.0) / p.sigma
    val = np.exp(-(1.0 + p.xi) * _log1p_over_xi(p.xi, s)) / p.sigma
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def quantile(p: GpdParams, level: ConfidenceLevel) -> float:
    """Quantile (inverse cdf) at the given confidence level."""
    t = -math.log1p(-level.alpha)
    return float(p.sigma * _scaled_expm1(p.xi, t))


def mean(p: GpdParams) -> float | None:
    """Expected value, or None when it does not exist (xi >= 1)."""
    if p.xi >= 1.0:
        return None
    return p.sigma / (1.0 - p.xi)


def variance(p: GpdParams) -> float | None:
    """Variance, or None when it does not exist (xi >= 0.5)."""
    if p.xi >= 0.5:
        return None
    return p.sigma**2 / ((1.0 - p.xi) ** 2 * (1.0 - 2.0 * p.xi))


def sample(p: GpdParams, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` iid values by inverse-transform sampling.

    The generator is owned by the caller; draws are deterministic given its
    state and must not be shared across threads.
    """
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    t = -np.log1p(-rng.random(count))
    return p.sigma * np.asarray(_scaled_expm1(p.xi, t), dtype=float)
