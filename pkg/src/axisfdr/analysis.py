"""In-memory analysis chain shared by the CLI, the sweep and the simulator.

statistic map -> chi-square transform -> box smoothing + mask shrink ->
histogram + empirical null -> FDR curves -> thresholds -> discoveries and
clusters.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .empirical_null import (
    DEFAULT_BIN_WIDTH,
    DEFAULT_FIT_UPPER,
    TheoreticalNull,
    build_histogram,
    count_discoveries,
    fdr_curve,
    fit_empirical_null,
    select_threshold,
)
from .errors import DomainError, FitError
from .spatial import box_smooth, extract_clusters, shrink_mask
from .teststat import statistic_map

log = logging.getLogger(__name__)

DEFAULT_ALPHAS = (0.2, 0.05, 0.01)


@dataclass
class PipelineConfig:
    group1: List[str] = field(default_factory=list)
    group2: List[str] = field(default_factory=list)
    mask: Optional[str] = None
    target_df: float = 2
    bin_width: float = DEFAULT_BIN_WIDTH
    fit_upper: float = DEFAULT_FIT_UPPER
    b: int = 1
    alphas: Tuple[float, ...] = DEFAULT_ALPHAS
    null: str = "empirical"  # "empirical" | "theoretical"
    p0: str = "fit"  # "fit" | "one"
    seed: int = 0
    out: Optional[str] = None

    def __post_init__(self):
        self.b = int(self.b)
        self.alphas = tuple(float(a) for a in self.alphas)
        if self.b < 1 or self.b % 2 == 0:
            raise DomainError(f"smoothing size b must be odd and >= 1, got {self.b}")
        if not self.alphas or not all(0 < a < 1 for a in self.alphas):
            raise DomainError("alphas must lie in (0, 1)")
        if self.null not in ("empirical", "theoretical"):
            raise DomainError(f"null must be 'empirical' or 'theoretical', got {self.null!r}")
        if self.p0 not in ("fit", "one"):
            raise DomainError(f"p0 must be 'fit' or 'one', got {self.p0!r}")
        if not self.bin_width > 0:
            raise DomainError("bin width must be positive")
        if not 0 < self.fit_upper <= 1:
            raise DomainError("fit_upper must lie in (0, 1]")
        if not self.target_df > 0:
            raise DomainError("target_df must be positive")

    def to_dict(self):
        d = asdict(self)
        d["alphas"] = list(self.alphas)
        return d


@dataclass
class AlphaResult:
    alpha: float
    u_alpha: Optional[float]
    count: int
    voxels: np.ndarray
    cluster_sizes: List[int]
    clusters: list


@dataclass
class AnalysisResult:
    config: PipelineConfig
    raw: object  # StatisticMap before smoothing
    statistic: object  # StatisticVolume after smoothing
    mask: object  # effective mask after defects and shrinkage
    values: np.ndarray
    histogram: object
    fit: object
    fit_error: Optional[dict]
    null_used: object
    p0_used: float
    curves: dict
    curve: object  # the curve thresholds are read from
    per_alpha: List[AlphaResult]
    warnings: List[str]

    def table_rows(self):
        """Rows in the results-table layout, one per alpha."""
        f = self.fit
        rows = []
        for r in self.per_alpha:
            rows.append(
                {
                    "b": self.config.b,
                    "N": int(self.mask.size),
                    "p0_hat": None if f is None else f.p0_raw,
                    "a_hat": None if f is None else f.a,
                    "nu_hat": None if f is None else f.nu,
                    "T90": None if f is None else f.fit_limit,
                    "alpha": r.alpha,
                    "u_alpha": r.u_alpha,
                    "R": r.count,
                    "n_clusters": len(r.cluster_sizes),
                    "largest_sizes": r.cluster_sizes[:3],
                }
            )
        return rows


def theoretical_null(target_df, b):
    """chi2(df) for b = 1; for b > 1 the independent-voxel law chi2(df b^3) / b^3."""
    k = b**3
    return TheoreticalNull(df=target_df * k, scale=1.0 / k)


def analyze_statistic(stat_map, config):
    """Run everything downstream of the (transformed) statistic map."""
    warnings = []
    smoothed = box_smooth(stat_map.volume, config.b)
    mask = shrink_mask(stat_map.mask, smoothed)
    values = smoothed.data[mask.data]
    if values.size == 0:
        raise DomainError("mask is empty after removing defects and edge voxels")
    values = np.maximum(values, 0.0)
    hist = build_histogram(values, config.bin_width)

    fit, fit_error = None, None
    try:
        limit = float(np.quantile(values, config.fit_upper))
        fit = fit_empirical_null(hist, config.fit_upper, fit_limit=limit, nu0=config.target_df)
    except FitError as exc:
        fit_error = {"message": str(exc), **exc.diagnostics}
        if config.null == "empirical":
            msg = f"empirical null fit failed ({exc}); falling back to the theoretical null"
            log.warning(msg)
            warnings.append(msg)

    theo = theoretical_null(config.target_df, config.b)
    null = fit if (config.null == "empirical" and fit is not None) else theo
    p0 = fit.p0 if (config.p0 == "fit" and fit is not None) else 1.0

    curves = {"theoretical": fdr_curve(values, theo, p0=1.0)}
    if fit is not None:
        curves["empirical"] = fdr_curve(values, fit, p0=fit.p0 if config.p0 == "fit" else 1.0)
    chosen = fdr_curve(values, null, p0=p0)

    per_alpha = []
    for alpha in config.alphas:
        u = select_threshold(chosen, alpha)
        if u is None:
            per_alpha.append(AlphaResult(alpha, None, 0, np.zeros((0, 3), int), [], []))
            continue
        count, voxels = count_discoveries(smoothed, mask, u)
        cl = extract_clusters(voxels, mask.geometry)
        per_alpha.append(AlphaResult(alpha, u, count, voxels, cl.sizes, cl.clusters))

    return AnalysisResult(
        config=config,
        raw=stat_map,
        statistic=smoothed,
        mask=mask,
        values=values,
        histogram=hist,
        fit=fit,
        fit_error=fit_error,
        null_used=null,
        p0_used=float(p0),
        curves=curves,
        curve=chosen,
        per_alpha=per_alpha,
        warnings=warnings,
    )


def analyze(groups, mask, config):
    """Full analysis of direction volumes ``groups`` (list of lists) inside ``mask``."""
    smap = statistic_map(groups, mask, target_df=config.target_df)
    if smap.defects:
        log.info("%d degenerate voxels removed from the mask", len(smap.defects))
    return analyze_statistic(smap, config)
