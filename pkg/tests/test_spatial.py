import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axisfdr.errors import DataError, DomainError
from axisfdr.spatial import (
    DirectionVolume,
    GridGeometry,
    Mask,
    StatisticVolume,
    box_smooth,
    extract_clusters,
    group_mean_direction_map,
    shrink_mask,
)


def _vol(data):
    data = np.asarray(data, float)
    return StatisticVolume(GridGeometry(data.shape), data)


def _naive_smooth(x, b):
    h = b // 2
    out = np.full(x.shape, np.nan)
    nx, ny, nz = x.shape
    for i in range(h, nx - h):
        for j in range(h, ny - h):
            for k in range(h, nz - h):
                out[i, j, k] = x[i - h : i + h + 1, j - h : j + h + 1, k - h : k + h + 1].mean()
    return out


# ---------------------------------------------------------------- smoothing


def test_smooth_b1_is_identity(rng):
    v = _vol(rng.normal(size=(5, 6, 7)))
    s = box_smooth(v, 1)
    assert np.array_equal(s.data, v.data)
    assert s.data is not v.data


def test_smooth_constant_volume():
    s = box_smooth(_vol(np.full((7, 7, 7), 3.5)), 3)
    inner = s.data[1:-1, 1:-1, 1:-1]
    assert np.allclose(inner, 3.5, atol=1e-12)
    border = np.ones((7, 7, 7), bool)
    border[1:-1, 1:-1, 1:-1] = False
    assert np.all(np.isnan(s.data[border]))


def test_smooth_matches_direct_window_mean(rng):
    x = rng.normal(size=(6, 7, 8))
    for b in (3, 5):
        assert np.allclose(box_smooth(_vol(x), b).data, _naive_smooth(x, b), equal_nan=True, atol=1e-12)


def test_smooth_rejects_even_and_nonpositive():
    for b in (0, 2, 4, -1):
        with pytest.raises(DomainError):
            box_smooth(_vol(np.zeros((5, 5, 5))), b)


def test_smooth_nan_poisons_windows():
    x = np.ones((7, 7, 7))
    x[3, 3, 3] = np.nan
    s = box_smooth(_vol(x), 3).data
    assert np.all(np.isnan(s[2:5, 2:5, 2:5]))
    assert s[1, 1, 1] == pytest.approx(1.0)


def test_smooth_chisq_moments():
    x = np.random.default_rng(11).chisquare(2, (32, 32, 32))
    s = box_smooth(_vol(x), 5).data[2:-2, 2:-2, 2:-2]
    assert abs(s.mean() - 2) < 0.05
    assert abs(s.var() / (4 / 125) - 1) < 0.15


@given(st.integers(0, 2**31), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=30, deadline=None)
def test_smooth_linear(seed, a, c):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, 6, 6, 6))
    lhs = box_smooth(_vol(a * x + c * y), 3).data
    rhs = a * box_smooth(_vol(x), 3).data + c * box_smooth(_vol(y), 3).data
    assert np.allclose(lhs, rhs, equal_nan=True, atol=1e-10)


def test_smooth_translation_equivariant(rng):
    x = rng.normal(size=(10, 10, 10))
    shifted = np.roll(x, (1, 2, 3), axis=(0, 1, 2))
    s0 = box_smooth(_vol(x), 3).data
    s1 = box_smooth(_vol(shifted), 3).data
    # compare where both windows stay clear of the wrap-around seam
    assert np.allclose(s1[5:9, 6:9, 7:9], s0[4:8, 4:7, 4:6])


# ---------------------------------------------------------------- mask shrinkage


def test_shrink_full_mask_20cube():
    geom = GridGeometry((20, 20, 20))
    x = np.random.default_rng(3).chisquare(2, geom.dims)
    m = shrink_mask(Mask.full(geom), box_smooth(StatisticVolume(geom, x), 3))
    assert m.size == 18**3
    assert not m.data[0].any() and m.data[1:-1, 1:-1, 1:-1].all()


def test_shrink_idempotent_and_monotone(rng):
    geom = GridGeometry((12, 12, 12))
    vol = StatisticVolume(geom, rng.normal(size=geom.dims))
    mask = Mask(geom, rng.random(geom.dims) < 0.7)
    sizes = []
    for b in (1, 3, 5, 7):
        sm = box_smooth(vol, b)
        m = shrink_mask(mask, sm)
        assert np.array_equal(shrink_mask(m, sm).data, m.data)
        sizes.append(m.size)
    assert sizes == sorted(sizes, reverse=True)
    assert sizes[0] == mask.size


def test_shrink_geometry_mismatch():
    with pytest.raises(DataError):
        shrink_mask(Mask.full(GridGeometry((3, 3, 3))), _vol(np.zeros((4, 3, 3))))


# ---------------------------------------------------------------- clusters


def test_corner_adjacency_is_connected():
    geom = GridGeometry((3, 3, 3))
    cs = extract_clusters(np.array([[0, 0, 0], [1, 1, 1]]), geom)
    assert cs.sizes == [2]


def test_two_separated_blobs():
    geom = GridGeometry((10, 10, 10))
    sel = np.zeros(geom.dims, bool)
    sel[0:3, 0:3, 0:3] = True
    sel[6:9, 6:9, 6:9] = True
    sel[6, 0, 0] = True
    cs = extract_clusters(sel, geom)
    assert cs.sizes == [27, 27, 1]
    assert tuple(cs.clusters[0][0]) == (0, 0, 0)


def test_empty_selection():
    assert len(extract_clusters(np.zeros((0, 3), int), GridGeometry((4, 4, 4)))) == 0


@given(st.integers(0, 2**31), st.floats(0.05, 0.6))
@settings(max_examples=30, deadline=None)
def test_clusters_partition_selection(seed, p):
    geom = GridGeometry((7, 6, 5))
    sel = np.random.default_rng(seed).random(geom.dims) < p
    cs = extract_clusters(sel, geom)
    members = np.concatenate(cs.clusters) if len(cs) else np.zeros((0, 3), int)
    assert len(members) == sel.sum()
    assert len({tuple(m) for m in members}) == len(members)
    assert all(sel[tuple(m)] for m in members)
    assert cs.sizes == sorted(cs.sizes, reverse=True)
    # no two clusters touch
    lab = np.zeros(geom.dims, int)
    for k, c in enumerate(cs.clusters, 1):
        lab[c[:, 0], c[:, 1], c[:, 2]] = k
    for c_id, c in enumerate(cs.clusters, 1):
        for v in c:
            lo = np.maximum(v - 1, 0)
            nb = lab[lo[0] : v[0] + 2, lo[1] : v[1] + 2, lo[2] : v[2] + 2]
            assert set(np.unique(nb)) <= {0, c_id}


# ---------------------------------------------------------------- mean directions


def test_group_mean_single_subject_is_canonical():
    geom = GridGeometry((2, 1, 1))
    axes = np.array([[[[0.0, 0.0, -1.0]]], [[[0.6, -0.8, 0.0]]]])
    d, deg = group_mean_direction_map([DirectionVolume(geom, axes)], Mask.full(geom))
    assert np.allclose(d.axes[0, 0, 0], [0, 0, 1])
    assert np.allclose(d.axes[1, 0, 0], [0.6, -0.8, 0])
    assert not deg.data.any()


def test_group_mean_sign_invariant_and_masked():
    geom = GridGeometry((2, 1, 1))
    a = np.array([1.0, 0.1, 0.0]) / np.hypot(1, 0.1)
    b = np.array([1.0, -0.1, 0.0]) / np.hypot(1, 0.1)
    v1 = DirectionVolume(geom, np.stack([a, a]).reshape(2, 1, 1, 3))
    v2 = DirectionVolume(geom, -np.stack([b, b]).reshape(2, 1, 1, 3))
    mask = Mask(geom, np.array([True, False]).reshape(2, 1, 1))
    d, deg = group_mean_direction_map([v1, v2], mask)
    assert np.allclose(d.axes[0, 0, 0], [1, 0, 0])
    assert np.all(np.isnan(d.axes[1, 0, 0]))


def test_group_mean_tie_is_degenerate():
    geom = GridGeometry((1, 1, 1))
    g = [DirectionVolume(geom, np.array(v, float).reshape(1, 1, 1, 3)) for v in ([1, 0, 0], [0, 1, 0])]
    d, deg = group_mean_direction_map(g, Mask.full(geom))
    assert deg.data.all()
    assert np.all(np.isnan(d.axes))
