"""Maximum-likelihood fitting of the GPD and the asymptotic law of the estimators.

The fitter profiles the likelihood over a coarse shape grid (best scale per
shape found by a vectorized 1-D log-scale search), then polishes the best
grid point with a Nelder-Mead simplex in (xi, log sigma).  The profiled start
avoids the spurious stationary points the raw likelihood surface can have.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .gpd import XI_ZERO_TOL, GpdParams

# search box for the shape parameter; the asymptotic theory needs xi > -0.5
XI_BOX = (-0.49, 5.0)
_XI_GRID = np.linspace(-0.49, 1.0, 41)
_N_SIGMA_GRID = 13
_FATOL = 1e-10
_XATOL = 1e-8
_MAX_FEV = 10_000
# cap on elements of the profile-scan workspace before chunking over xi
_CHUNK_BUDGET = 4_000_000


@dataclass(frozen=True)
class MleEstimate:
    """Point estimate of (xi, sigma) with the achieved log-likelihood."""

    xi_hat: float
    sigma_hat: float
    log_likelihood: float
    n: int
    converged: bool

    def __post_init__(self):
        if not self.sigma_hat > 0.0:
            raise ValidationError(f"sigma_hat must be positive, got {self.sigma_hat}")


@dataclass(frozen=True)
class AsymptoticCovariance:
    """Limiting normal law of (xi_hat, sigma_hat) at sample size n."""

    mean_vector: tuple[float, float]
    cov_matrix: np.ndarray


def _loglik(xi: float, sigma: float, x: np.ndarray) -> float:
    """Raw GPD log-likelihood; -inf when a point falls outside the support."""
    n = x.size
    if not (sigma > 0.0 and math.isfinite(sigma)):
        return -math.inf
    if abs(xi) < XI_ZERO_TOL:
        return -n * math.log(sigma) - float(x.sum()) / sigma
    z = xi / sigma * x
    if z.min() <= -1.0:
        return -math.inf
    return -n * math.log(sigma) - (1.0 + 1.0 / xi) * float(np.log1p(z).sum())


def log_likelihood(p: GpdParams, data) -> float:
    """Sum of log densities of ``data`` under ``p`` (-inf outside the support)."""
    x = np.asarray(data, dtype=float)
    if x.size == 0 or not np.all(np.isfinite(x)):
        raise ValidationError("data must be a nonempty sequence of finite values")
    if x.min() < 0.0:
        return -math.inf
    return _loglik(p.xi, p.sigma, x)


def _profile_start(x: np.ndarray) -> tuple[float, float]:
    """Coarse (xi, sigma) scan: best log-spaced sigma at each grid xi.

    Only locates the basin for the simplex polish, so large samples are
    scanned in float32.
    """
    n = x.size
    xbar = float(x.mean())
    sig_grid = xbar * np.geomspace(1e-3, 1e2, _N_SIGMA_GRID)
    log_sig = np.log(sig_grid)
    inv_sig = 1.0 / sig_grid

    dtype = np.float32 if n >= 4096 else np.float64
    xc = x.astype(dtype, copy=False)
    best_ll = -np.inf
    best = (0.1, xbar)
    chunk = max(1, int(_CHUNK_BUDGET / (n * _N_SIGMA_GRID)))
    for lo in range(0, _XI_GRID.size, chunk):
        xi_c = _XI_GRID[lo:lo + chunk]
        z = xc[:, None, None] * (xi_c[None, :, None] * inv_sig[None, None, :]).astype(dtype)
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.log1p(z).sum(axis=0, dtype=np.float64)
            ll = -n * log_sig[None, :] - (1.0 + 1.0 / xi_c)[:, None] * s
        ll[~np.isfinite(ll)] = -np.inf
        i, j = np.unravel_index(np.argmax(ll), ll.shape)
        if ll[i, j] > best_ll:
            best_ll = ll[i, j]
            best = (float(xi_c[i]), float(sig_grid[j]))
    return best


def _nelder_mead(f, x0: np.ndarray, step: float = 0.05):
    """Minimal 2-D simplex minimizer; returns (x, fx, converged)."""
    s0 = (x0[0], x0[1])
    sim = [s0, (x0[0] + step, x0[1]), (x0[0], x0[1] + step)]
    fv = [f(p) for p in sim]
    nfev = 3
    while nfev < _MAX_FEV:
        pairs = sorted(zip(fv, sim), key=lambda t: t[0])
        fv = [t[0] for t in pairs]
        sim = [t[1] for t in pairs]
        (b0, b1), (w0, w1) = sim[0], sim[2]
        if (fv[2] - fv[0] < _FATOL
                and max(abs(sim[1][0] - b0), abs(sim[1][1] - b1),
                        abs(w0 - b0), abs(w1 - b1)) < _XATOL):
            return np.array(sim[0]), fv[0], True
        c0 = 0.5 * (b0 + sim[1][0])
        c1 = 0.5 * (b1 + sim[1][1])
        xr = (2.0 * c0 - w0, 2.0 * c1 - w1)
        fr = f(xr)
        nfev += 1
        if fr < fv[0]:
            xe = (3.0 * c0 - 2.0 * w0, 3.0 * c1 - 2.0 * w1)
            fe = f(xe)
            nfev += 1
            sim[2], fv[2] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < fv[1]:
            sim[2], fv[2] = xr, fr
        else:
            toward = xr if fr < fv[2] else sim[2]
            xc = (c0 + 0.5 * (toward[0] - c0), c1 + 0.5 * (toward[1] - c1))
            fc = f(xc)
            nfev += 1
            if fc < min(fr, fv[2]):
                sim[2], fv[2] = xc, fc
            else:
                sim[1] = (b0 + 0.5 * (sim[1][0] - b0), b1 + 0.5 * (sim[1][1] - b1))
                sim[2] = (b0 + 0.5 * (w0 - b0), b1 + 0.5 * (w1 - b1))
                fv[1], fv[2] = f(sim[1]), f(sim[2])
                nfev += 2
    i = int(np.argmin(fv))
    return np.array(sim[i]), fv[i], False


def fit(data) -> MleEstimate:
    """Maximize the GPD likelihood over xi in [-0.49, 5], sigma > 0.

    Raises ValidationError for fewer than two points, negative values, or
    constant data.  A stalled simplex is reported via ``converged=False``
    rather than an exception.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValidationError("need at least two observations")
    if not np.all(np.isfinite(x)):
        raise ValidationError("data must be finite")
    if x.min() < 0.0:
        raise ValidationError("exceedances must be nonnegative")
    if x.max() == x.min():
        raise ValidationError("constant data: likelihood is degenerate")

    xi0, sig0 = _profile_start(x)

    def negll(theta):
        xi, log_sig = theta
        if not (XI_BOX[0] <= xi <= XI_BOX[1]) or abs(log_sig) > 700.0:
            return math.inf
        v = _loglik(xi, math.exp(log_sig), x)
        return math.inf if v == -math.inf else -v

    theta, fmin, converged = _nelder_mead(negll, np.array([xi0, math.log(sig0)]))
    return MleEstimate(
        xi_hat=float(theta[0]),
        sigma_hat=float(math.exp(theta[1])),
        log_likelihood=float(-fmin),
        n=int(x.size),
        converged=bool(converged),
    )


def asymptotic_covariance(p: GpdParams, n: int) -> AsymptoticCovariance:
    """Mean vector and covariance of the limiting normal law of the estimators.

    cov = ((1 + xi)/n) * [[1 + xi, -sigma], [-sigma, 2*sigma^2]], valid for
    xi > -0.5.
    """
    if p.xi <= -0.5:
        raise ValidationError(f"asymptotic covariance requires xi > -0.5, got {p.xi}")
    if n < 1:
        raise ValidationError(f"n must be a positive integer, got {n}")
    c = (1.0 + p.xi) / n
    cov = c * np.array([[1.0 + p.xi, -p.sigma], [-p.sigma, 2.0 * p.sigma**2]])
    return AsymptoticCovariance(mean_vector=(p.xi, p.sigma), cov_matrix=cov)
