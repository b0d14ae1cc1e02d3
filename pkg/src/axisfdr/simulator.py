"""Monte Carlo experiments: null laws, single-voxel power, FDR control, smoothing sweeps.

Randomness is always derived from ``(seed, chunk or replicate index)`` so
results do not depend on how many worker threads run the chunks.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import special
from ._parallel import ordered_map
from .analysis import PipelineConfig, analyze_statistic
from .directional import frame_from_pole, rotation_about, sample_pole
from .empirical_null import TheoreticalNull, count_discoveries, fdr_curve, select_threshold
from .errors import DomainError
from .spatial import DirectionVolume, GridGeometry, Mask, StatisticVolume
from .teststat import StatisticMap, statistic_map, watson_statistic_batch

log = logging.getLogger(__name__)

CHUNK_REPS = 1 << 14
POLE = np.array([0.0, 0.0, 1.0])


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


@dataclass(frozen=True)
class MonteCarloResult:
    estimate: float
    standard_error: float
    replications: int
    seed: int


# ---------------------------------------------------------------- single voxel


def _two_group_chunk(kappa, n1, n2, rot2, reps, rng):
    x = sample_pole(kappa, reps * (n1 + n2), rng).reshape(reps, n1 + n2, 3)
    g1 = x[:, :n1]
    g2 = x[:, n1:] @ rot2.T
    return watson_statistic_batch([g1, g2])


def simulate_statistics(kappa, n1, n2, reps, seed, delta_deg=0.0):
    """Watson statistics for two groups whose mean axes are ``delta_deg`` apart.

    Degenerate replicates are redrawn.  Returns ``(values, redrawn)``.
    """
    if reps < 1:
        raise DomainError("reps must be >= 1")
    if n1 < 2 or n2 < 2:
        raise DomainError("group sizes must be >= 2")
    rot2 = rotation_about([1.0, 0.0, 0.0], math.radians(delta_deg))

    def chunk(c):
        rng = _rng(seed, c)
        m = min(CHUNK_REPS, reps - c * CHUNK_REPS)
        T, bad = _two_group_chunk(kappa, n1, n2, rot2, m, rng)
        redrawn = 0
        while bad.any():
            k = int(bad.sum())
            redrawn += k
            T2, bad2 = _two_group_chunk(kappa, n1, n2, rot2, k, rng)
            idx = np.nonzero(bad)[0]
            T[idx] = T2
            bad[idx] = bad2
        return T, redrawn

    parts = ordered_map(chunk, range(math.ceil(reps / CHUNK_REPS)))
    values = np.concatenate([p[0] for p in parts])
    redrawn = sum(p[1] for p in parts)
    if redrawn:
        log.info("redrew %d degenerate replicates", redrawn)
    return values, redrawn


def simulate_null_statistics(kappa, n1, n2, reps, seed):
    """``reps`` Watson statistics under the null of one common Watson law."""
    return simulate_statistics(kappa, n1, n2, reps, seed)[0]


def estimate_power(delta_deg, kappa, n1, n2, alpha, reps, seed):
    """Rejection rate of the F(2, 2(n - 2)) test at level ``alpha``."""
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    crit = special.f_isf(2, 2 * (n1 + n2 - 2), alpha)
    T, _ = simulate_statistics(kappa, n1, n2, reps, seed, delta_deg)
    p = float(np.mean(T > crit))
    return MonteCarloResult(p, math.sqrt(p * (1 - p) / reps), int(reps), seed)


# ---------------------------------------------------------------- volumes


@dataclass(frozen=True)
class SimulationSpec:
    geometry: GridGeometry
    n1: int = 6
    n2: int = 6
    kappa: float = 50.0
    mean_axis: np.ndarray = field(default_factory=lambda: POLE.copy())
    signal: Optional[np.ndarray] = None  # boolean volume
    delta_deg: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n1 < 2 or self.n2 < 2:
            raise DomainError("group sizes must be >= 2")
        if not 0 <= self.delta_deg <= 90:
            raise DomainError("delta must lie in [0, 90] degrees")
        if not self.kappa >= 0:
            raise DomainError("kappa must be >= 0")
        mu = np.asarray(self.mean_axis, dtype=float)
        if mu.shape not in ((3,), self.geometry.dims + (3,)):
            raise DomainError("mean_axis must be one axis or one per voxel")
        object.__setattr__(self, "mean_axis", mu / np.linalg.norm(mu, axis=-1, keepdims=True))
        sig = np.zeros(self.geometry.dims, bool) if self.signal is None else np.asarray(self.signal, bool)
        if sig.shape != self.geometry.dims:
            raise DomainError("signal region must match the grid")
        object.__setattr__(self, "signal", sig)


def box_region(dims, lo, size):
    """Boolean volume with a ``size``-sided cube starting at ``lo``."""
    sig = np.zeros(dims, bool)
    sl = tuple(slice(int(a), int(a) + int(s)) for a, s in zip(lo, np.broadcast_to(size, 3)))
    sig[sl] = True
    if sig.sum() != np.prod(np.broadcast_to(size, 3)):
        raise DomainError("signal box does not fit inside the grid")
    return sig


@dataclass
class VolumePair:
    group1: list
    group2: list
    truth: Mask
    mask: Mask


def _group_means(spec):
    mu = np.broadcast_to(spec.mean_axis, spec.geometry.dims + (3,)).copy()
    mu2 = mu.copy()
    if spec.delta_deg and spec.signal.any():
        m = mu[spec.signal]
        perp = frame_from_pole(m)[..., 0]  # first frame column is orthogonal to m
        d = math.radians(spec.delta_deg)
        mu2[spec.signal] = math.cos(d) * m + math.sin(d) * perp
    return mu, mu2


def simulate_volume_pair(spec):
    """Per-voxel Watson draws for two groups; group means differ by delta in the signal region."""
    geom = spec.geometry
    mus = _group_means(spec)
    frames = [frame_from_pole(mu.reshape(-1, 3)) for mu in mus]
    groups = []
    for g, (n, F) in enumerate(zip((spec.n1, spec.n2), frames)):
        vols = []
        for k in range(n):
            pts = sample_pole(spec.kappa, geom.size, _rng(spec.seed, g, k))
            axes = np.einsum("vij,vj->vi", F, pts).reshape(geom.dims + (3,))
            vols.append(DirectionVolume(geom, axes))
        groups.append(vols)
    return VolumePair(groups[0], groups[1], Mask(geom, spec.signal.copy()), Mask.full(geom))


def fdr_control_experiment(spec, alpha, reps):
    """Mean false discovery proportion of the theoretical-null procedure with p0 = 1.

    Replicate ``r`` reruns ``spec`` with its seed replaced by the pair
    ``(spec.seed, r)``.
    """
    if not 0 < alpha <= 1:
        raise DomainError("alpha must lie in (0, 1]")
    null = TheoreticalNull(2)

    def one(r):
        sub = replace(spec, seed=int(np.random.SeedSequence(spec.seed, spawn_key=(r,)).generate_state(1)[0]))
        pair = simulate_volume_pair(sub)
        smap = statistic_map([pair.group1, pair.group2], pair.mask, target_df=2)
        vals = smap.volume.data[smap.mask.data]
        u = select_threshold(fdr_curve(vals, null, p0=1.0), alpha)
        if u is None:
            return 0.0
        R, vox = count_discoveries(smap.volume, smap.mask, u)
        V = int((~pair.truth.data[tuple(vox.T)]).sum())
        return V / max(R, 1)

    fdp = np.array(ordered_map(one, range(reps)))
    se = float(fdp.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return MonteCarloResult(float(fdp.mean()), se, int(reps), spec.seed)


# ---------------------------------------------------------------- smoothing sweeps


def sweep_statistic(stat_map, b_values, alpha_values, **config):
    """Results-table rows for every (b, alpha) from one precomputed statistic map.

    Extra keyword arguments go to :class:`PipelineConfig`.  A failing
    configuration yields rows with an ``error`` field; the sweep continues.
    """
    rows = []
    for b in b_values:
        try:
            cfg = PipelineConfig(b=b, alphas=tuple(alpha_values), **config)
            res = analyze_statistic(stat_map, cfg)
        except Exception as exc:  # recorded per row by design
            for a in alpha_values:
                rows.append({"b": b, "alpha": a, "error": f"{type(exc).__name__}: {exc}"})
            continue
        for row in res.table_rows():
            if res.fit_error is not None:
                row["error"] = res.fit_error["message"]
            rows.append(row)
    return rows


def smoothing_sweep(spec, b_values, alpha_values, **config):
    """Simulate ``spec`` once and sweep the smoothing size over it."""
    for b in b_values:
        if int(b) < 1 or int(b) % 2 == 0:
            raise DomainError(f"smoothing sizes must be odd, got {b}")
    pair = simulate_volume_pair(spec)
    smap = statistic_map([pair.group1, pair.group2], pair.mask, target_df=config.get("target_df", 2))
    return sweep_statistic(smap, b_values, alpha_values, **config)


def chisq_null_map(geometry, df=2.0, seed=0):
    """Statistic map of i.i.d. chi-square(df) values on a full grid."""
    data = _rng(seed).chisquare(df, geometry.dims)
    return StatisticMap(StatisticVolume(geometry, data), Mask.full(geometry), [], 2, 20)
