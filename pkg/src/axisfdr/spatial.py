"""Voxel grids: volume containers, box smoothing, mask shrinkage, clusters.

Arrays are indexed ``[x, y, z]``.  Direction volumes carry an extra
trailing axis of length 3; undefined voxels are NaN.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy import ndimage

from .directional import TIE_TOL, canonical_axes, scatter_matrices
from .errors import DataError, DomainError


@dataclass(frozen=True)
class GridGeometry:
    dims: Tuple[int, int, int]
    spacing: Tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        spacing = tuple(float(s) for s in self.spacing)
        if len(dims) != 3 or min(dims) < 1:
            raise DomainError(f"dims must be three positive counts, got {self.dims!r}")
        if len(spacing) != 3 or not all(s > 0 for s in spacing):
            raise DomainError(f"spacing must be three positive numbers, got {self.spacing!r}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)

    @property
    def size(self):
        return self.dims[0] * self.dims[1] * self.dims[2]


def _require_shape(arr, shape, what):
    if arr.shape != tuple(shape):
        raise DataError(f"{what} has shape {arr.shape}, expected {tuple(shape)}")


@dataclass
class StatisticVolume:
    geometry: GridGeometry
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        _require_shape(self.data, self.geometry.dims, "statistic volume")


@dataclass
class DirectionVolume:
    geometry: GridGeometry
    axes: np.ndarray

    def __post_init__(self):
        self.axes = np.asarray(self.axes, dtype=float)
        _require_shape(self.axes, self.geometry.dims + (3,), "direction volume")

    @property
    def defined(self):
        return np.all(np.isfinite(self.axes), axis=-1)


@dataclass
class Mask:
    geometry: GridGeometry
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=bool)
        _require_shape(self.data, self.geometry.dims, "mask")

    @property
    def size(self):
        return int(self.data.sum())

    @classmethod
    def full(cls, geometry):
        return cls(geometry, np.ones(geometry.dims, dtype=bool))


@dataclass
class ClusterSet:
    clusters: List[np.ndarray] = field(default_factory=list)

    @property
    def sizes(self):
        return [len(c) for c in self.clusters]

    def __len__(self):
        return len(self.clusters)


def check_same_geometry(*items):
    geoms = {it.geometry for it in items}
    if len(geoms) > 1:
        raise DataError(f"geometry mismatch: {sorted(g.dims for g in geoms)}")


# ---------------------------------------------------------------- smoothing


def _window_sum(x, b, axis):
    # centred length-b running sum along one axis; edges where the window
    # leaves the array are returned as NaN
    n = x.shape[axis]
    out = np.full(x.shape, np.nan)
    if b > n:
        return out
    h = b // 2
    c = np.cumsum(x, axis=axis)
    zero = np.zeros_like(np.take(c, [0], axis=axis))
    c = np.concatenate([zero, c], axis=axis)
    upper = np.take(c, np.arange(b, n + 1), axis=axis)
    lower = np.take(c, np.arange(0, n - b + 1), axis=axis)
    idx = [slice(None)] * x.ndim
    idx[axis] = slice(h, n - h)
    out[tuple(idx)] = upper - lower
    return out


def box_smooth(vol, b):
    """Mean over the centred ``b x b x b`` cube at every voxel.

    The whole array is smoothed irrespective of any mask.  A voxel whose
    window crosses the array border or touches a non-finite value comes
    out as NaN.  ``b = 1`` returns an exact copy.
    """
    b = int(b)
    if b < 1 or b % 2 == 0:
        raise DomainError(f"box size must be an odd positive integer, got {b}")
    if b == 1:
        return StatisticVolume(vol.geometry, vol.data.copy())
    bad = ~np.isfinite(vol.data)
    total = np.where(bad, 0.0, vol.data)
    nbad = bad.astype(float)
    for axis in range(3):
        total = _window_sum(total, b, axis)
        nbad = _window_sum(nbad, b, axis)
    out = total / b**3
    out[~(nbad == 0)] = np.nan
    return StatisticVolume(vol.geometry, out)


def shrink_mask(mask, smoothed):
    """Drop mask voxels where the smoothed statistic is not finite."""
    check_same_geometry(mask, smoothed)
    return Mask(mask.geometry, mask.data & np.isfinite(smoothed.data))


# ---------------------------------------------------------------- clusters

_CONNECTIVITY_26 = np.ones((3, 3, 3), dtype=bool)


def extract_clusters(selected, geometry):
    """26-connected components of the selected voxels, largest first.

    ``selected`` is an ``(m, 3)`` array of voxel indices or a boolean
    volume.  Ties in size are broken by the lowest linear (x-fastest)
    index of the cluster so the ordering is deterministic.
    """
    sel = np.asarray(selected)
    if sel.dtype == bool and sel.shape == geometry.dims:
        grid = sel
    else:
        grid = np.zeros(geometry.dims, dtype=bool)
        sel = sel.reshape(-1, 3).astype(int)
        if sel.size:
            grid[sel[:, 0], sel[:, 1], sel[:, 2]] = True
    labels, count = ndimage.label(grid, structure=_CONNECTIVITY_26)
    if count == 0:
        return ClusterSet([])
    idx = np.argwhere(labels)
    lab = labels[idx[:, 0], idx[:, 1], idx[:, 2]]
    clusters = []
    for k in range(1, count + 1):
        members = idx[lab == k]
        clusters.append(members[np.lexsort((members[:, 0], members[:, 1], members[:, 2]))])
    nx, ny, _ = geometry.dims

    def key(c):
        first = c[0]
        return (-len(c), first[0] + nx * (first[1] + ny * first[2]))

    return ClusterSet(sorted(clusters, key=key))


# ---------------------------------------------------------------- mean directions


def group_mean_direction_map(group, mask):
    """Per-voxel principal axis of the subjects' scatter matrix.

    Returns ``(DirectionVolume, degenerate)`` where ``degenerate`` is a
    Mask of in-mask voxels whose mean axis is not identifiable.  Voxels
    outside the mask (or degenerate) are NaN in the output.
    """
    if len(group) < 1:
        raise DomainError("need at least one direction volume")
    check_same_geometry(mask, *group)
    geom = mask.geometry
    out = np.full(geom.dims + (3,), np.nan)
    degenerate = np.zeros(geom.dims, dtype=bool)
    where = np.nonzero(mask.data)
    x = np.stack([v.axes[where] for v in group], axis=-2)  # (m, n, 3)
    x = x / np.linalg.norm(x, axis=-1, keepdims=True)
    if len(group) == 1:
        out[where] = canonical_axes(x[:, 0, :])
        return DirectionVolume(geom, out), Mask(geom, degenerate)
    w, v = np.linalg.eigh(scatter_matrices(x))
    tied = (w[:, 2] - w[:, 1]) < TIE_TOL
    axes = canonical_axes(v[:, :, 2])
    axes[tied] = np.nan
    out[where] = axes
    degenerate[where] = tied
    return DirectionVolume(geom, out), Mask(geom, degenerate)
