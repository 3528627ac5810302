"""Raw loss sample to tail model: ordering, threshold, exceedances, quantiles.

The threshold is the (n+1)-th largest sample value for a configurable tail
fraction; the n values above it, minus the threshold, form the exceedance
sample the GPD is fitted to.  Two parent-quantile estimators are provided:
the direct plug-in form and the equivalent form expressed through the fitted
tail quantile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .gpd import ConfidenceLevel, _scaled_expm1
from .mle import MleEstimate, fit as fit_mle

MIN_EXCEEDANCES = 10


@dataclass(frozen=True)
class Sample:
    """A finite loss series (loss units; larger = worse)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < MIN_EXCEEDANCES:
            raise ValidationError(f"sample needs at least {MIN_EXCEEDANCES} values")
        if not np.all(np.isfinite(v)):
            raise ValidationError("sample values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class TailSelection:
    """Threshold, exceedance count and the exceedances themselves."""

    u_hat: float
    n_hat: int
    exceedances: np.ndarray

    def __post_init__(self):
        exc = np.asarray(self.exceedances, dtype=float)
        if self.n_hat != exc.size or self.n_hat < 1:
            raise ValidationError("n_hat must equal the number of exceedances")
        if not np.all(exc > 0.0):
            raise ValidationError("every exceedance must be strictly positive")
        if not math.isfinite(self.u_hat):
            raise ValidationError("threshold must be finite")
        object.__setattr__(self, "exceedances", exc)


@dataclass(frozen=True)
class TailFit:
    """Tail selection plus the GPD fitted to its exceedances."""

    selection: TailSelection
    estimate: MleEstimate
    N: int

    def __post_init__(self):
        if self.N < self.selection.n_hat:
            raise ValidationError("N must be at least the exceedance count")


def select_tail(s: Sample, fraction: float) -> TailSelection:
    """Split off the largest ``floor(fraction * N)`` values as the tail.

    Ties at the threshold are resolved by shrinking the tail until every
    retained exceedance is strictly positive; fewer than MIN_EXCEEDANCES
    survivors raise ValidationError.
    """
    if not 0.0 < fraction < 1.0:
        raise ValidationError(f"tail fraction must lie in (0, 1), got {fraction}")
    n_hat = int(math.floor(fraction * s.N))
    if n_hat < MIN_EXCEEDANCES:
        raise ValidationError(
            f"tail fraction {fraction} keeps only {n_hat} of {s.N} values; "
            f"need at least {MIN_EXCEEDANCES}")
    desc = np.sort(s.values)[::-1]
    # x_(n_hat) == x_(n_hat+1) would give a zero exceedance; shrink past ties
    while n_hat >= 1 and desc[n_hat - 1] == desc[n_hat]:
        n_hat -= 1
    if n_hat < MIN_EXCEEDANCES:
        raise ValidationError(
            f"ties at the threshold leave only {n_hat} positive exceedances")
    u_hat = float(desc[n_hat])
    return TailSelection(u_hat=u_hat, n_hat=n_hat, exceedances=desc[:n_hat] - u_hat)


def fit_tail(s: Sample, fraction: float) -> TailFit:
    """Convenience: select the tail and fit the GPD to its exceedances."""
    sel = select_tail(s, fraction)
    return TailFit(selection=sel, estimate=fit_mle(sel.exceedances), N=s.N)


def _check_in_tail(fit: TailFit, level: ConfidenceLevel) -> float:
    ratio = fit.N / fit.selection.n_hat * (1.0 - level.alpha)
    if ratio >= 1.0:
        raise ValidationError(
            f"quantile level {level.alpha} lies below the threshold: "
            f"(N/n)(1-alpha) = {ratio:.4g} >= 1")
    return ratio


def estimate_parent_quantile(fit: TailFit, level: ConfidenceLevel) -> float:
    """Parent-distribution quantile from the fitted tail model.

    u + (sigma/xi) * [((N/n)(1-alpha))**(-xi) - 1], with the exponential
    limit for xi near zero.
    """
    ratio = _check_in_tail(fit, level)
    est = fit.estimate
    t = -math.log(ratio)
    return fit.selection.u_hat + est.sigma_hat * float(_scaled_expm1(est.xi_hat, t))


def parent_quantile_from_tail_quantile(
    fit: TailFit, q_hat_alpha: float, level: ConfidenceLevel
) -> float:
    """Parent quantile expressed through the tail quantile ``q_hat_alpha``.

    u + (sigma/xi) * [(n/N)**xi - 1] + (n/N)**xi * q_hat; algebraically
    identical to estimate_parent_quantile when q_hat comes from the same fit.
    """
    _check_in_tail(fit, level)
    est = fit.estimate
    log_frac = math.log(fit.selection.n_hat / fit.N)
    shift = est.sigma_hat * float(_scaled_expm1(est.xi_hat, log_frac))
    scale = math.exp(est.xi_hat * log_frac)
    return fit.selection.u_hat + shift + scale * q_hat_alpha
