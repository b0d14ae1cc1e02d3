"""Scaled chi-square empirical null, FDR curves and threshold selection.

The null ``a * chi2(nu)`` is fitted to the bulk of a histogram of
nonnegative statistics by Poisson regression of bin counts on
``(1, t, log t)``; the coefficients give ``a = -1 / (2 b1)``,
``nu = 2 (b2 + 1)`` and, through the intercept, the null fraction ``p0``.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special as sc

from . import special
from .errors import DomainError, FitError

DEFAULT_BIN_WIDTH = 0.2
DEFAULT_FIT_UPPER = 0.9
IRLS_TOL = 1e-10
IRLS_MAX_ITER = 100
MIN_FIT_BINS = 5


@dataclass(frozen=True)
class Histogram:
    bin_width: float
    lower_edge: float
    counts: np.ndarray
    total: int

    @property
    def edges(self):
        return self.lower_edge + self.bin_width * np.arange(len(self.counts) + 1)

    @property
    def midpoints(self):
        return self.lower_edge + self.bin_width * (np.arange(len(self.counts)) + 0.5)

    def density(self):
        """Counts scaled to a density, ``counts / (N * width)``."""
        return self.counts / (self.total * self.bin_width)


def build_histogram(values, bin_width=DEFAULT_BIN_WIDTH):
    """Counts of ``values`` in half-open bins ``[k w, (k + 1) w)`` from 0 up."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise DomainError("cannot build a histogram of no values")
    if not bin_width > 0:
        raise DomainError("bin width must be positive")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise DomainError("histogram values must be finite and >= 0")
    k = np.floor(v / bin_width).astype(np.int64)
    # agree with edges computed as k * width, whatever the rounding of v / width
    k -= v < k * bin_width
    k += v >= (k + 1) * bin_width
    counts = np.bincount(k, minlength=int(k.max()) + 1)
    return Histogram(float(bin_width), 0.0, counts, int(v.size))


@dataclass(frozen=True)
class EmpiricalNullFit:
    a: float
    nu: float
    p0: float
    fit_limit: float
    intercept: float
    deviance: float
    p0_raw: float = math.nan
    coef: tuple = ()
    se_a: float = math.nan
    se_nu: float = math.nan
    se_p0: float = math.nan
    iterations: int = 0
    n_bins: int = 0
    nu0: Optional[float] = None
    source: str = "empirical"

    def density(self, t):
        return empirical_null_density(t, self)

    def survival(self, u):
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        return special.chisq_sf(self.nu, u / self.a)

    def as_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["coef"] = list(self.coef)
        return d


@dataclass(frozen=True)
class TheoreticalNull:
    """``scale * chi2(df)``; scale 1 is the usual theoretical null."""

    df: float
    scale: float = 1.0
    source: str = "theoretical"

    def survival(self, u):
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        return special.chisq_sf(self.df, u / self.scale)

    def density(self, t):
        return scaled_chisq_density(t, self.scale, self.df)


def scaled_chisq_density(t, a, nu):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or (nu < 2 and np.any(t == 0)):
        raise DomainError("density undefined at t <= 0 for this degrees of freedom")
    half = nu / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        logt = np.log(t)
        logf = -t / (2 * a) + (half - 1) * logt - half * math.log(2 * a) - sc.gammaln(half)
    if nu == 2:
        logf = np.where(t == 0, -math.log(2 * a), logf)
    out = np.exp(logf)
    return out.item() if out.ndim == 0 else out


def empirical_null_density(t, fit):
    """Density of ``fit.a * chi2(fit.nu)`` at ``t``."""
    return scaled_chisq_density(t, fit.a, fit.nu)


def _irls_poisson(X, y):
    beta = None
    mu = y + 0.1
    eta = np.log(mu)
    for it in range(1, IRLS_MAX_ITER + 1):
        z = eta + (y - mu) / mu
        XtW = X.T * mu
        try:
            new = np.linalg.solve(XtW @ X, XtW @ z)
        except np.linalg.LinAlgError as exc:
            raise FitError("singular IRLS system", {"iteration": it}) from exc
        if not np.all(np.isfinite(new)):
            raise FitError("IRLS diverged", {"iteration": it, "beta": list(new)})
        eta = X @ new
        if np.any(eta > 700):
            raise FitError("IRLS diverged", {"iteration": it, "beta": list(new)})
        mu = np.exp(eta)
        if beta is not None and np.all(np.abs(new - beta) <= IRLS_TOL * (1 + np.abs(new))):
            return new, mu, it
        beta = new
    raise FitError("IRLS did not converge", {"iterations": IRLS_MAX_ITER, "beta": list(beta)})


def fit_empirical_null(hist, fit_upper=DEFAULT_FIT_UPPER, fit_limit=None, nu0=None):
    """Fit ``p0 * a chi2(nu)`` to the histogram bins with midpoint in ``(0, fit_limit]``.

    ``fit_limit`` defaults to the ``fit_upper`` quantile read off the
    histogram; pass the exact sample quantile when the raw values are at
    hand (:func:`fit_empirical_null_values` does).
    """
    if not 0 < fit_upper <= 1:
        raise DomainError("fit_upper must lie in (0, 1]")
    if fit_limit is None:
        fit_limit = histogram_quantile(hist, fit_upper)
    mid = hist.midpoints
    use = (mid > 0) & (mid <= fit_limit)
    y = hist.counts[use].astype(float)
    t = mid[use]
    diag = {"fit_limit": float(fit_limit), "bins": int(use.sum()), "positive_bins": int((y > 0).sum())}
    if (y > 0).sum() < MIN_FIT_BINS:
        raise FitError(f"fewer than {MIN_FIT_BINS} occupied bins below the fit limit", diag)
    X = np.column_stack([np.ones_like(t), t, np.log(t)])
    beta, mu, iters = _irls_poisson(X, y)
    b0, b1, b2 = beta
    if not b1 < 0:
        raise FitError("fitted null does not decay (coefficient of t >= 0)", dict(diag, beta=list(beta)))
    a = -1.0 / (2 * b1)
    nu = 2 * (b2 + 1)
    if not nu > 0:
        raise FitError("fitted degrees of freedom are not positive", dict(diag, beta=list(beta)))
    half = nu / 2
    log_p0 = b0 + half * math.log(2 * a) + sc.gammaln(half) - math.log(hist.total * hist.bin_width)
    p0_raw = math.exp(log_p0)
    with np.errstate(divide="ignore", invalid="ignore"):
        dev_terms = np.where(y > 0, y * np.log(y / mu), 0.0) - (y - mu)
    cov = np.linalg.inv((X.T * mu) @ X)
    grad_p0 = np.array([1.0, -half / b1, math.log(2 * a) + sc.digamma(half)])
    return EmpiricalNullFit(
        a=a,
        nu=nu,
        p0=min(p0_raw, 1.0),
        fit_limit=float(fit_limit),
        intercept=float(b0),
        deviance=float(2 * dev_terms.sum()),
        p0_raw=p0_raw,
        coef=tuple(float(b) for b in beta),
        se_a=float(math.sqrt(cov[1, 1]) / (2 * b1 * b1)),
        se_nu=float(2 * math.sqrt(cov[2, 2])),
        se_p0=float(p0_raw * math.sqrt(grad_p0 @ cov @ grad_p0)),
        iterations=iters,
        n_bins=int(use.sum()),
        nu0=nu0,
    )


def fit_empirical_null_values(values, bin_width=DEFAULT_BIN_WIDTH, fit_upper=DEFAULT_FIT_UPPER, nu0=None):
    """Histogram ``values`` and fit, with the fit limit at their exact quantile."""
    v = np.asarray(values, dtype=float).ravel()
    hist = build_histogram(v, bin_width)
    limit = float(np.quantile(v, fit_upper))
    return hist, fit_empirical_null(hist, fit_upper, fit_limit=limit, nu0=nu0)


def histogram_quantile(hist, p):
    """Quantile read from the histogram with linear interpolation inside bins."""
    cum = np.concatenate([[0], np.cumsum(hist.counts)]) / hist.total
    return float(np.interp(p, cum, hist.edges))


# ---------------------------------------------------------------- FDR


@dataclass(frozen=True)
class FdrCurve:
    thresholds: np.ndarray
    fdr_hat: np.ndarray  # clamped to [0, 1]
    fdr_raw: np.ndarray
    source: str
    p0_used: float
    tail_counts: np.ndarray = field(default=None)


def fdr_curve(values, null, p0=1.0, grid=None):
    """Tail-ratio FDR estimate ``p0 * S_null(u) / S_emp(u)`` on a threshold grid.

    ``null`` is a :class:`TheoreticalNull` or :class:`EmpiricalNullFit`.
    The empirical survival is floored at ``1 / N``.  The default grid is 0
    followed by the distinct observed values.
    """
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise DomainError("fdr_curve needs at least one value")
    if not 0 < p0 <= 1:
        raise DomainError("p0 must lie in (0, 1]")
    if grid is None:
        grid = np.concatenate([[0.0], np.unique(v[v > 0])])
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DomainError("empty threshold grid")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("threshold grid must be strictly increasing")
    n = v.size
    R = n - np.searchsorted(v, grid, side="left")
    s_emp = np.maximum(R, 1) / n
    raw = p0 * np.asarray(null.survival(grid)) / s_emp
    return FdrCurve(grid, np.clip(raw, 0.0, 1.0), raw, null.source, float(p0), R)


def select_threshold(curve, alpha):
    """Smallest grid threshold whose estimated FDR is at most ``alpha``, else None."""
    hits = np.nonzero(curve.fdr_raw <= alpha)[0]
    if hits.size == 0:
        return None
    return float(curve.thresholds[hits[0]])


def count_discoveries(values, mask, u_alpha):
    """``(R, voxels)``: in-mask voxels with statistic ``>= u_alpha``."""
    if not math.isfinite(u_alpha):
        raise DomainError("threshold must be finite")
    data = values.data
    with np.errstate(invalid="ignore"):
        hit = mask.data & np.isfinite(data) & (data >= u_alpha)
    voxels = np.argwhere(hit)
    return len(voxels), voxels
