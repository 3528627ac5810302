"""Finite-sample density of the GPD quantile estimator, its CDF and moments.

The sampling law of the plug-in tail quantile at sample size ``n`` is
approximated by pushing the limiting bivariate normal of the parameter
estimators through the quantile map.  The density is

    f_q(z) = (1/2pi) (n/sigma) (1 + 4 xi + 5 xi^2 + 2 xi^3)^(-1/2)
             * Integral du psi(u) exp{ -(n/(1+2 xi)) [ (u-xi)^2/(1+xi)
               + (u-xi)(z psi(u) - sigma)/((1+xi) sigma)
               + (z psi(u) - sigma)^2 / (2 sigma^2) ] }

with ``psi(u) = u / ((1-alpha)**(-u) - 1)``.  Moments are computed two ways:
a Gauss-Hermite expectation of ``v/psi(u)`` under the bivariate normal (fast,
shipped default) and direct quadrature of the density over an adaptively
chosen z-window (cross-check route, also supplies the normalization defect).
The approximation is validated for ``n >= 50`` and ``xi`` in [0, 0.5];
anything else must be requested explicitly and is flagged by a warning.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .bias import BiasSurface, SurfaceRow
from .errors import OutsideValidatedRegionWarning, QuadratureError, ValidationError
from .gpd import ConfidenceLevel, GpdParams, quantile
from .mle import asymptotic_covariance
from .quadrature import (KRONROD_WEIGHTS, GAUSS_WEIGHTS, fixed_panel_rule,
                         integrate_adaptive, panel_nodes)

GH_NODES = 96
_U_ZERO_TOL = 1e-8
_U_SERIES_BAND = 1e-4

# grid used for the published bias/variance tables: 20 log-spaced sample sizes
# in [50, 1000] and shape steps of 0.1
DEFAULT_N_GRID = tuple(int(v) for v in np.rint(np.geomspace(50, 1000, 20)))
DEFAULT_XI_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)


@dataclass(frozen=True)
class QuadratureConfig:
    """Accuracy knobs for the density quadrature."""

    rel_tol: float = 1e-8
    u_halfwidth_sds: float = 10.0
    z_expansion_factor: float = 1.5
    max_refinements: int = 20

    def __post_init__(self):
        for name in ("rel_tol", "u_halfwidth_sds", "z_expansion_factor"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"{name} must be positive")
        if self.max_refinements < 0:
            raise ValidationError("max_refinements must be >= 0")


DEFAULT_QUADRATURE = QuadratureConfig()


@dataclass(frozen=True)
class DensitySpec:
    """Parameter tuple (n, alpha, sigma, xi) indexing one estimator density."""

    n: int
    alpha: ConfidenceLevel
    sigma: float
    xi: float
    quad: QuadratureConfig = field(default=DEFAULT_QUADRATURE)
    allow_unvalidated: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"n must be a positive integer, got {self.n}")
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValidationError(f"sigma must be positive, got {self.sigma}")
        if not math.isfinite(self.xi) or self.xi <= -0.5:
            raise ValidationError(f"the density requires xi > -0.5, got {self.xi}")
        if not (self.in_validated_region or self.allow_unvalidated):
            raise ValidationError(
                f"(n={self.n}, xi={self.xi}) is outside the validated region "
                "(n >= 50, 0 <= xi <= 0.5); pass allow_unvalidated=True to override")

    @property
    def in_validated_region(self) -> bool:
        return self.n >= 50 and 0.0 <= self.xi <= 0.5


@dataclass(frozen=True)
class QuantileStats:
    """Moments of the estimator density against the true quantile."""

    mean: float
    variance: float
    bias: float
    true_quantile: float
    normalization_defect: float


def psi(u, level: ConfidenceLevel):
    """The weight ``u / ((1-alpha)**(-u) - 1)``; positive for all real u."""
    return _psi_of(-math.log1p(-level.alpha), np.asarray(u, dtype=float))


def _psi_of(t: float, u: np.ndarray):
    y = t * u
    out = np.empty_like(u)
    tiny = np.abs(u) < _U_ZERO_TOL
    band = (np.abs(u) < _U_SERIES_BAND) & ~tiny
    rest = ~(tiny | band)
    out[tiny] = 1.0 / t
    yb = y[band]
    out[band] = (1.0 - 0.5 * yb + yb * yb / 12.0) / t
    out[rest] = u[rest] / np.expm1(y[rest])
    if out.ndim == 0:
        return float(out)
    return out


class _Plan(NamedTuple):
    t: float
    q_true: float
    gh_mean: float
    gh_var: float
    u_nodes: np.ndarray
    u_weights: np.ndarray


@lru_cache(maxsize=128)
def _hermgauss(m: int):
    x, w = np.polynomial.hermite.hermgauss(m)
    return x, w


def _warn_if_unvalidated(spec: DensitySpec) -> None:
    if not spec.in_validated_region:
        warnings.warn(
            f"(n={spec.n}, xi={spec.xi}) lies outside the validated region; "
            "results are an unchecked extrapolation",
            OutsideValidatedRegionWarning, stacklevel=3)


def _gh_moments(spec: DensitySpec) -> tuple[float, float]:
    """Mean and variance of v/psi(u) under the limiting normal law."""
    t = -math.log1p(-spec.alpha.alpha)
    cov = asymptotic_covariance(GpdParams(spec.sigma, spec.xi), spec.n).cov_matrix
    L = np.linalg.cholesky(cov)
    x, w = _hermgauss(GH_NODES)
    W = np.outer(w, w) / math.pi
    u = spec.xi + math.sqrt(2.0) * L[0, 0] * x
    v = spec.sigma + math.sqrt(2.0) * (L[1, 0] * x[:, None] + L[1, 1] * x[None, :])
    g = v / _psi_of(t, u)[:, None]
    mean = float((W * g).sum())
    var = float((W * (g - mean) ** 2).sum())
    return mean, var


def _integrand_matrix(spec: DensitySpec, t: float, u: np.ndarray, z: np.ndarray):
    """psi(u) * exp(-bracket) on the (u, z) grid, without the prefactor."""
    xi, sigma, n = spec.xi, spec.sigma, spec.n
    pu = _psi_of(t, u)
    du = u - xi
    r = pu[:, None] * z[None, :] - sigma
    br = (du * du / (1.0 + xi))[:, None] \
        + (du / ((1.0 + xi) * sigma))[:, None] * r \
        + r * r / (2.0 * sigma * sigma)
    return pu[:, None] * np.exp(-(n / (1.0 + 2.0 * xi)) * br)


def _prefactor(spec: DensitySpec) -> float:
    poly = 1.0 + 4.0 * spec.xi + 5.0 * spec.xi**2 + 2.0 * spec.xi**3
    return spec.n / (2.0 * math.pi * spec.sigma * math.sqrt(poly))


def _build_u_schedule(spec: DensitySpec, t: float, probes: np.ndarray):
    """Composite Kronrod rule on the truncated u-range, refined until the
    probe densities stabilize; raises QuadratureError when the refinement
    budget runs out."""
    sd_u = (1.0 + spec.xi) / math.sqrt(spec.n)
    lo = spec.xi - spec.quad.u_halfwidth_sds * sd_u
    hi = spec.xi + spec.quad.u_halfwidth_sds * sd_u
    n_panels = 16
    prev = None
    for _ in range(spec.quad.max_refinements + 1):
        nodes, weights = fixed_panel_rule(lo, hi, n_panels)
        m = _integrand_matrix(spec, t, nodes, probes)
        vals = weights @ m
        # embedded Gauss-vs-Kronrod error, worst case over the probes
        fv = m.reshape(n_panels, 15, probes.size)
        half = (hi - lo) / (2.0 * n_panels)
        k = np.einsum("pnk,n->pk", fv, KRONROD_WEIGHTS) * half
        g = np.einsum("pnk,n->pk", fv, GAUSS_WEIGHTS) * half
        scale = np.maximum(np.abs(vals), 1e-300)
        embedded = float((np.abs(k - g).sum(axis=0) / scale).max())
        if prev is not None:
            drift = float((np.abs(vals - prev) / scale).max())
            if embedded <= spec.quad.rel_tol and drift <= spec.quad.rel_tol:
                return nodes, weights
        prev = vals
        n_panels *= 2
    raise QuadratureError(
        f"u-integral did not stabilize within {spec.quad.max_refinements} "
        f"refinements at (n={spec.n}, xi={spec.xi})")


def _density_raw(spec: DensitySpec, t: float, u_nodes: np.ndarray,
                 u_weights: np.ndarray, z: np.ndarray) -> np.ndarray:
    out = np.empty(z.shape, dtype=float)
    # chunk so the (u, z) workspace stays bounded
    step = max(1, int(4_000_000 / max(u_nodes.size, 1)))
    pref = _prefactor(spec)
    for k in range(0, z.size, step):
        m = _integrand_matrix(spec, t, u_nodes, z[k:k + step])
        out[k:k + step] = pref * (u_weights @ m)
    return out


def _density_from_plan(spec: DensitySpec, plan: _Plan, z: np.ndarray) -> np.ndarray:
    return _density_raw(spec, plan.t, plan.u_nodes, plan.u_weights, z)


@lru_cache(maxsize=256)
def _plan(spec: DensitySpec) -> _Plan:
    t = -math.log1p(-spec.alpha.alpha)
    q = quantile(GpdParams(spec.sigma, spec.xi), spec.alpha)
    gh_mean, gh_var = _gh_moments(spec)
    s = math.sqrt(max(gh_var, 1e-300))
    probes = np.unique(q + s * np.array(
        [-6.0, -3.0, -1.5, -0.5, 0.0, 0.5, 1.5, 3.0, 6.0]))
    u_nodes, u_weights = _build_u_schedule(spec, t, probes)
    return _Plan(t, q, gh_mean, gh_var, u_nodes, u_weights)


@lru_cache(maxsize=256)
def _window(spec: DensitySpec, moments: bool = True) -> tuple[float, float]:
    """Adaptive z-window: start at q +- 8 sd, widen each edge until it is idle.

    With ``moments=True`` the edge criterion covers all three moment
    integrands (f, |z| f, z^2 f) so the second moment is not silently
    truncated; with ``moments=False`` only the density's own mass counts
    (enough for plotting and the CDF).  The two edges expand independently.
    """
    plan = _plan(spec)
    s = math.sqrt(max(plan.gh_var, 1e-300))
    lo, hi = plan.q_true - 8.0 * s, plan.q_true + 8.0 * s

    def f_parts(zz):
        fz = _density_from_plan(spec, plan, zz)
        if not moments:
            return fz[:, None]
        return np.stack([fz, np.abs(zz) * fz, zz * zz * fz], axis=-1)

    for _ in range(spec.quad.max_refinements + 1):
        totals, _err = integrate_adaptive(
            f_parts, lo, hi, rel_tol=max(spec.quad.rel_tol, 1e-6),
            max_rounds=spec.quad.max_refinements)
        contrib = f_parts(np.array([lo, hi])) * (hi - lo)
        budget = spec.quad.rel_tol * np.maximum(np.abs(totals), 1e-300)
        grow_lo = bool(np.any(contrib[0] >= budget))
        grow_hi = bool(np.any(contrib[1] >= budget))
        if not (grow_lo or grow_hi):
            return lo, hi
        c = 0.5 * (lo + hi)
        if grow_lo:
            lo = c - (c - lo) * spec.quad.z_expansion_factor
        if grow_hi:
            hi = c + (hi - c) * spec.quad.z_expansion_factor
    raise QuadratureError(
        f"z-window did not close at (n={spec.n}, xi={spec.xi}); raise "
        "max_refinements or rel_tol")


def evaluation_window(spec: DensitySpec) -> tuple[float, float]:
    """The adaptively chosen z-range that carries the density's mass."""
    _warn_if_unvalidated(spec)
    return _window(spec, moments=False)


def density(spec: DensitySpec, z):
    """Density of the quantile estimator at ``z`` (scalar or array)."""
    _warn_if_unvalidated(spec)
    plan = _plan(spec)
    arr = np.atleast_1d(np.asarray(z, dtype=float))
    out = _density_from_plan(spec, plan, arr)
    return float(out[0]) if np.ndim(z) == 0 else out


def cdf_of_estimator(spec: DensitySpec, q):
    """CDF of the quantile estimator at ``q`` (scalar or array)."""
    _warn_if_unvalidated(spec)
    plan = _plan(spec)
    if np.ndim(q) == 0:
        return float(_cdf_sorted(spec, plan, np.array([float(q)]))[0])
    qa = np.asarray(q, dtype=float)
    order = np.argsort(qa, kind="stable")
    vals = _cdf_sorted(spec, plan, qa[order])
    out = np.empty_like(vals)
    out[order] = vals
    return out


def _cdf_sorted(spec: DensitySpec, plan: _Plan, qs: np.ndarray) -> np.ndarray:
    """Cumulative integrals of the density at ascending points ``qs``."""
    lo, hi = _window(spec, moments=False)
    pts = np.clip(qs, lo, hi)
    cuts = np.concatenate([[lo], pts])
    # split each [cuts_i, cuts_{i+1}] segment into panels no wider than base
    base = (hi - lo) / 1024.0
    seg_lo, seg_hi = cuts[:-1], cuts[1:]
    n_sub = np.maximum(1, np.ceil((seg_hi - seg_lo) / base)).astype(int)
    starts = np.repeat(seg_lo, n_sub)
    counts = np.repeat(n_sub, n_sub)
    offs = np.concatenate([np.arange(k) for k in n_sub]) if n_sub.size else np.array([])
    widths = np.repeat((seg_hi - seg_lo), n_sub) / counts
    p_lo = starts + offs * widths
    p_hi = p_lo + widths

    halves = 0.5 * (p_hi - p_lo)
    nodes = panel_nodes(p_lo, p_hi)
    fv = _density_from_plan(spec, plan, nodes.ravel()).reshape(nodes.shape)
    panel_vals = (fv @ KRONROD_WEIGHTS) * halves

    seg_ids = np.repeat(np.arange(seg_lo.size), n_sub)
    seg_vals = np.zeros(seg_lo.size)
    np.add.at(seg_vals, seg_ids, panel_vals)
    return np.clip(np.cumsum(seg_vals), 0.0, 1.0)


def stats(spec: DensitySpec, method: str = "hermite") -> QuantileStats:
    """Mean, variance and bias of the estimator density.

    ``method="hermite"`` (default) evaluates the moments as Gauss-Hermite
    expectations under the limiting normal law; ``method="quadrature"``
    integrates the density directly.  Both must agree to quadrature accuracy;
    the normalization defect always comes from the direct route.
    """
    if method not in ("hermite", "quadrature"):
        raise ValidationError(f"unknown stats method {method!r}")
    _warn_if_unvalidated(spec)
    plan = _plan(spec)
    z_lo, z_hi = _window(spec)

    def f(zz):
        fz = _density_from_plan(spec, plan, zz)
        return np.stack([fz, zz * fz, zz * zz * fz], axis=-1)

    totals, _err = integrate_adaptive(
        f, z_lo, z_hi, rel_tol=spec.quad.rel_tol,
        max_rounds=spec.quad.max_refinements)
    i0, i1, i2 = (float(v) for v in totals)
    if method == "hermite":
        mean, var = plan.gh_mean, plan.gh_var
    else:
        mean = i1
        var = i2 - i1 * i1
    return QuantileStats(
        mean=mean,
        variance=var,
        bias=mean - plan.q_true,
        true_quantile=plan.q_true,
        normalization_defect=abs(i0 - 1.0),
    )


def bias_variance_surface(
    n_values, xi_values, alpha: ConfidenceLevel, sigma: float,
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
) -> BiasSurface:
    """QuantileStats over the (n, xi) grid, row-major by n then xi."""
    rows = []
    for n in n_values:
        for xi in xi_values:
            spec = DensitySpec(n=int(n), alpha=alpha, sigma=sigma, xi=float(xi),
                               quad=quad)
            try:
                st = stats(spec)
            except QuadratureError as exc:
                raise QuadratureError(
                    f"surface cell (n={n}, xi={xi}) failed: {exc}") from exc
            rows.append(SurfaceRow(n=int(n), xi=float(xi),
                                   bias=st.bias, variance=st.variance))
    return BiasSurface(alpha=alpha, sigma=sigma, rows=tuple(rows))
