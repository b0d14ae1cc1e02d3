"""Scalar special functions: log-gamma, chi-square and F distributions.

Thin, domain-checked wrappers over ``scipy.special``.  Every function
accepts scalars or arrays and returns the same shape; real (non-integer)
degrees of freedom are supported throughout because fitted empirical
nulls routinely produce values such as 1.78.
"""

import numpy as np
from scipy import special as sc

from .errors import DomainError


def _scalar_or_array(x):
    return x.item() if np.ndim(x) == 0 else x


def _check_df(*dfs):
    for df in dfs:
        if np.any(~(np.asarray(df, dtype=float) > 0)):
            raise DomainError(f"degrees of freedom must be positive, got {df!r}")


def log_gamma(x):
    """Natural log of the gamma function for ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("log_gamma requires x > 0")
    return _scalar_or_array(sc.gammaln(x))


def chisq_cdf(df, x):
    """Lower tail ``P(df/2, x/2)`` of the chi-square distribution."""
    _check_df(df)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("chisq_cdf requires x >= 0")
    return _scalar_or_array(sc.gammainc(np.divide(df, 2.0), x / 2.0))


def chisq_sf(df, x):
    """Upper tail ``1 - chisq_cdf(df, x)``, computed without cancellation."""
    _check_df(df)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("chisq_sf requires x >= 0")
    return _scalar_or_array(sc.gammaincc(np.divide(df, 2.0), x / 2.0))


def _polish_chisq(df, x, p, upper):
    # two Newton steps on the CDF; the density is the derivative of both tails
    half = np.divide(df, 2.0)
    for _ in range(2):
        pos = x > 0
        if not np.any(pos):
            break
        xs = np.where(pos, x, 1.0)
        logpdf = (half - 1) * np.log(xs / 2.0) - xs / 2.0 - sc.gammaln(half) - np.log(2.0)
        pdf = np.exp(logpdf)
        if upper:
            resid = sc.gammaincc(half, xs / 2.0) - p
            step = -resid / pdf
        else:
            resid = sc.gammainc(half, xs / 2.0) - p
            step = resid / pdf
        ok = pos & np.isfinite(step) & (pdf > 0)
        x = np.where(ok, np.maximum(x - step, x / 2.0), x)
    return x


def chisq_quantile(df, p):
    """Inverse of :func:`chisq_cdf`; ``p = 1`` is rejected (the answer is +inf)."""
    _check_df(df)
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise DomainError("probability must lie in [0, 1]")
    if np.any(p == 1):
        raise DomainError("chisq_quantile(p=1) is +inf")
    x = 2.0 * sc.gammaincinv(np.divide(df, 2.0), p)
    x = _polish_chisq(df, x, p, upper=False)
    return _scalar_or_array(np.where(p == 0, 0.0, x))


def chisq_isf(df, q):
    """Upper-tail quantile: ``x`` with ``chisq_sf(df, x) = q``."""
    _check_df(df)
    q = np.asarray(q, dtype=float)
    if np.any((q < 0) | (q > 1)) or np.any(np.isnan(q)):
        raise DomainError("tail probability must lie in [0, 1]")
    if np.any(q == 0):
        raise DomainError("chisq_isf(q=0) is +inf")
    x = 2.0 * sc.gammainccinv(np.divide(df, 2.0), q)
    x = _polish_chisq(df, x, q, upper=True)
    return _scalar_or_array(np.where(q == 1, 0.0, x))


def incomplete_beta(a, b, x):
    """Regularized incomplete beta ``I_x(a, b)``."""
    _check_df(a, b)
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise DomainError("incomplete_beta requires 0 <= x <= 1")
    return _scalar_or_array(sc.betainc(a, b, x))


def f_cdf(df1, df2, x):
    """CDF of the F(df1, df2) distribution."""
    _check_df(df1, df2)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("f_cdf requires x >= 0")
    z = df1 * x / (df1 * x + df2)
    return _scalar_or_array(sc.betainc(df1 / 2.0, df2 / 2.0, z))


def f_sf(df1, df2, x):
    """Upper tail of F(df1, df2), evaluated through the complementary beta."""
    _check_df(df1, df2)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("f_sf requires x >= 0")
    w = df2 / (df1 * x + df2)
    return _scalar_or_array(sc.betainc(df2 / 2.0, df1 / 2.0, w))


def f_quantile(df1, df2, p):
    """Inverse of :func:`f_cdf` for ``0 <= p < 1``."""
    _check_df(df1, df2)
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p >= 1)):
        raise DomainError("f_quantile requires 0 <= p < 1")
    z = sc.betaincinv(df1 / 2.0, df2 / 2.0, p)
    return _scalar_or_array(df2 * z / (df1 * (1.0 - z)))


def f_isf(df1, df2, q):
    """Upper-tail quantile of F(df1, df2) for ``0 < q <= 1``."""
    _check_df(df1, df2)
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0) | (q > 1)):
        raise DomainError("f_isf requires 0 < q <= 1")
    w = sc.betaincinv(df2 / 2.0, df1 / 2.0, q)
    return _scalar_or_array(df2 * (1.0 - w) / (df1 * w))
