import numpy as np
import pytest

from axisfdr.errors import DataError
from axisfdr.spatial import DirectionVolume, GridGeometry, Mask, StatisticVolume
from axisfdr.volio import read_dvol, read_mvol, read_svol, write_dvol, write_mvol, write_svol

from _helpers import random_axes

GEOM = GridGeometry((3, 4, 5), (1.0, 2.0, 2.5))


def test_dvol_roundtrip(tmp_path, rng):
    axes = random_axes(rng, GEOM.size).reshape(GEOM.dims + (3,))
    axes[1, 2, 3] = np.nan
    p = tmp_path / "a.dvol"
    write_dvol(p, DirectionVolume(GEOM, axes))
    back = read_dvol(p)
    assert back.geometry == GEOM
    assert np.allclose(back.axes, axes.astype(np.float32), equal_nan=True)
    assert not back.defined[1, 2, 3]


def test_svol_mvol_roundtrip(tmp_path, rng):
    data = rng.normal(size=GEOM.dims)
    mask = rng.random(GEOM.dims) < 0.5
    write_svol(tmp_path / "s.svol", StatisticVolume(GEOM, data))
    write_mvol(tmp_path / "m.mvol", Mask(GEOM, mask))
    assert np.array_equal(read_svol(tmp_path / "s.svol").data, data.astype(np.float32))
    assert np.array_equal(read_mvol(tmp_path / "m.mvol").data, mask)


def test_x_fastest_layout(tmp_path):
    data = np.zeros(GEOM.dims)
    data[1, 0, 0] = 7.0
    write_svol(tmp_path / "s.svol", StatisticVolume(GEOM, data))
    raw = (tmp_path / "s.svol").read_bytes()
    payload = np.frombuffer(raw[8 + 12 + 24 :], dtype="<f4")
    assert payload[1] == 7.0 and payload.sum() == 7.0


def test_bad_magic(tmp_path):
    write_svol(tmp_path / "s.svol", StatisticVolume(GEOM, np.zeros(GEOM.dims)))
    with pytest.raises(DataError, match="magic"):
        read_dvol(tmp_path / "s.svol")


def test_truncated_payload(tmp_path):
    p = tmp_path / "m.mvol"
    write_mvol(p, Mask.full(GEOM))
    p.write_bytes(p.read_bytes()[:-1])
    with pytest.raises(DataError, match="size"):
        read_mvol(p)


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="nope.dvol"):
        read_dvol(tmp_path / "nope.dvol")
