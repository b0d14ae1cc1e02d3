"""High-concentration Watson F statistics and the F -> chi-square transform."""

import math
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy import special as sc

from . import special
from ._parallel import ordered_map
from .directional import TIE_TOL, _as_sample, scatter_matrices
from .errors import DataError, DegenerateMeanError, DegenerateStatisticError, DomainError
from .spatial import Mask, StatisticVolume, check_same_geometry

INTRA_TOL = 1e-14
CLAMP_TOL = 1e-12
CHUNK = 1 << 14


@dataclass(frozen=True)
class WatsonStatistic:
    value: float
    df_num: int
    df_den: int
    intergroup: float = math.nan
    intragroup: float = math.nan


def _eig_dispersion(x):
    """``(s, gap)`` from the top two scatter eigenvalues of ``(..., n, 3)`` samples."""
    w = np.linalg.eigvalsh(scatter_matrices(x))
    return 1.0 - w[..., 2], w[..., 2] - w[..., 1]


def watson_statistic_batch(groups):
    """Vectorized Watson statistic over leading batch dimensions.

    ``groups`` is a list of arrays shaped ``(..., n_j, 3)`` holding unit
    axes.  Returns ``(T, defect)``; ``defect`` marks entries with zero
    intragroup dispersion, a tied top eigenvalue, or a numerator below
    ``-1e-12``.  Defective entries are NaN in ``T``.
    """
    q = len(groups)
    sizes = [g.shape[-2] for g in groups]
    N = sum(sizes)
    pooled = np.concatenate(groups, axis=-2)
    s, gap = _eig_dispersion(pooled)
    defect = gap < TIE_TOL
    intra = np.zeros_like(s)
    for g, n in zip(groups, sizes):
        sj, gj = _eig_dispersion(g)
        intra = intra + n * sj
        defect |= gj < TIE_TOL
    inter = N * s - intra
    defect |= (intra < INTRA_TOL) | (inter < -CLAMP_TOL)
    inter = np.maximum(inter, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        T = (inter / (2 * (q - 1))) / (intra / (2 * (N - q)))
    return np.where(defect, np.nan, T), defect


def _group_dispersion(x):
    w = np.linalg.eigvalsh(x.T @ x / x.shape[0])
    if w[2] - w[1] < TIE_TOL:
        raise DegenerateMeanError(w[2], w[1])
    return 1.0 - w[2]


def _checked_group(g):
    x = _as_sample(g)
    if x.shape[0] < 2:
        raise DomainError("each group needs at least 2 axes")
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _ratio(inter, intra, q, N):
    if intra < INTRA_TOL:
        raise DegenerateStatisticError(f"intragroup dispersion {intra!r} is zero")
    if inter < -CLAMP_TOL:
        raise DegenerateStatisticError(f"negative intergroup dispersion {inter!r}")
    inter = max(inter, 0.0)
    value = (inter / (2 * (q - 1))) / (intra / (2 * (N - q)))
    return WatsonStatistic(value, 2 * (q - 1), 2 * (N - q), inter, intra)


def watson_two_sample(g1, g2):
    """Two-sample Watson statistic, null F(2, 2(n - 2)) at high concentration."""
    x1, x2 = _checked_group(g1), _checked_group(g2)
    n1, n2 = len(x1), len(x2)
    n = n1 + n2
    s = _group_dispersion(np.vstack([x1, x2]))
    s1, s2 = _group_dispersion(x1), _group_dispersion(x2)
    intra = n1 * s1 + n2 * s2
    return _ratio(n * s - intra, intra, 2, n)


def watson_multi_sample(groups):
    """q-sample Watson statistic, null F(2(q - 1), 2(N - q))."""
    xs = [_checked_group(g) for g in groups]
    if len(xs) < 2:
        raise DomainError("need at least two groups")
    N = sum(len(x) for x in xs)
    s = _group_dispersion(np.vstack(xs))
    intra = sum(len(x) * _group_dispersion(x) for x in xs)
    return _ratio(N * s - intra, intra, len(xs), N)


# ---------------------------------------------------------------- F <-> chi-square

_TINY_LOG = math.log(1e-300)


def _log_f_sf(df1, df2, t):
    # leading series term of log I_w(df2/2, df1/2) for w = df2/(df1 t + df2) -> 0
    a, b = df2 / 2.0, df1 / 2.0
    w = df2 / (df1 * t + df2)
    log_beta = sc.gammaln(a) + sc.gammaln(b) - sc.gammaln(a + b)
    return a * np.log(w) + b * np.log1p(-w) - np.log(a) - log_beta


def _chisq_isf_from_log(df, logq):
    # Newton on log Q(df/2, x/2) using its large-x asymptotic form
    a = df / 2.0
    y = np.maximum(-logq, 1.0)
    for _ in range(50):
        corr = np.log1p((a - 1) / y + (a - 1) * (a - 2) / (y * y))
        g = (a - 1) * np.log(y) - y - sc.gammaln(a) + corr - logq
        y_new = y - g / ((a - 1) / y - 1.0)
        if np.all(np.abs(y_new - y) <= 1e-14 * y):
            y = y_new
            break
        y = y_new
    return 2.0 * y


def f_to_chisq(t, df1, df2, target_df=2):
    """Map F(df1, df2) values to chi-square(target_df) by matching probabilities.

    Values below the F median go through the CDF, values above through the
    survival function, and survival probabilities below 1e-300 through a
    log-domain asymptotic so the upper tail never saturates.
    """
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("f_to_chisq requires finite input")
    if np.any(t < 0):
        raise DomainError("f_to_chisq requires t >= 0")
    p = special.f_cdf(df1, df2, t)
    q = special.f_sf(df1, df2, t)
    p, q = np.asarray(p), np.asarray(q)
    out = np.zeros(t.shape)
    low = (p < 0.5) & (t > 0)
    high = (p >= 0.5) & (q > 1e-300)
    tail = (p >= 0.5) & ~high
    if np.any(low):
        out[low] = special.chisq_quantile(target_df, p[low])
    if np.any(high):
        out[high] = special.chisq_isf(target_df, q[high])
    if np.any(tail):
        out[tail] = _chisq_isf_from_log(target_df, _log_f_sf(df1, df2, t[tail]))
    return out.item() if out.ndim == 0 else out


def chisq_to_f(x, df1, df2, source_df=2):
    """Inverse of :func:`f_to_chisq`."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise DomainError("chisq_to_f requires finite x >= 0")
    p = np.asarray(special.chisq_cdf(source_df, x))
    q = np.asarray(special.chisq_sf(source_df, x))
    out = np.zeros(x.shape)
    low = (p < 0.5) & (x > 0)
    high = (p >= 0.5) & (q > 0)
    if np.any(low):
        out[low] = special.f_quantile(df1, df2, p[low])
    if np.any(high):
        out[high] = special.f_isf(df1, df2, q[high])
    out[(p >= 0.5) & (q == 0)] = np.inf
    return out.item() if out.ndim == 0 else out


# ---------------------------------------------------------------- volumes


@dataclass
class StatisticMap:
    volume: StatisticVolume
    mask: Mask  # input mask minus defective voxels
    defects: List[tuple]
    df_num: int
    df_den: int


def statistic_map(groups, mask, target_df=None):
    """Voxelwise Watson statistic for ``groups`` (a list of lists of DirectionVolume).

    With ``target_df`` set, values are moved to the chi-square(target_df)
    scale.  Voxels where the statistic is degenerate, or where any subject
    has an undefined axis, are listed in ``defects`` and dropped from the
    returned mask.  Outside the returned mask the volume is NaN.
    """
    if len(groups) < 2:
        raise DomainError("need at least two groups")
    vols = [v for g in groups for v in g]
    if any(len(g) < 2 for g in groups):
        raise DomainError("each group needs at least 2 subjects")
    try:
        check_same_geometry(mask, *vols)
    except DataError as exc:
        raise DomainError(str(exc)) from exc
    geom = mask.geometry
    where = np.nonzero(mask.data)
    stacked = [np.stack([v.axes[where] for v in g], axis=-2) for g in groups]
    m = len(where[0])
    q = len(groups)
    N = sum(len(g) for g in groups)

    def run(start):
        parts = [x[start : start + CHUNK] for x in stacked]
        finite = np.all(np.isfinite(np.concatenate(parts, axis=-2)), axis=(-1, -2))
        parts = [np.where(finite[:, None, None], x, 1.0) for x in parts]
        parts = [x / np.linalg.norm(x, axis=-1, keepdims=True) for x in parts]
        T, defect = watson_statistic_batch(parts)
        defect |= ~finite
        return np.where(defect, np.nan, T), defect

    results = ordered_map(run, range(0, m, CHUNK))
    if results:
        T = np.concatenate([r[0] for r in results])
        defect = np.concatenate([r[1] for r in results])
    else:
        T = np.zeros(0)
        defect = np.zeros(0, dtype=bool)
    if target_df is not None and np.any(~defect):
        T[~defect] = f_to_chisq(T[~defect], 2 * (q - 1), 2 * (N - q), target_df)
    data = np.full(geom.dims, np.nan)
    data[where] = T
    eff = mask.data.copy()
    bad = tuple(w[defect] for w in where)
    eff[bad] = False
    defects = [tuple(int(c) for c in v) for v in zip(*bad)]
    return StatisticMap(StatisticVolume(geom, data), Mask(geom, eff), defects, 2 * (q - 1), 2 * (N - q))
