"""Binary volume files (little-endian, x-fastest voxel order).

Header: 8-byte magic, ``nx ny nz`` as uint32, ``sx sy sz`` as float64.
Payload: float32 triples (``.dvol``), float32 scalars (``.svol``) or
one byte per voxel (``.mvol``).
"""

import struct
from pathlib import Path

import numpy as np

from .errors import DataError
from .spatial import DirectionVolume, GridGeometry, Mask, StatisticVolume

DVOL_MAGIC = b"DVOL0001"
SVOL_MAGIC = b"SVOL0001"
MVOL_MAGIC = b"MVOL0001"
_HEADER = struct.Struct("<8s3I3d")


def _pack_header(magic, geometry):
    return _HEADER.pack(magic, *geometry.dims, *geometry.spacing)


def _read(path, magic, itemsize, per_voxel):
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror})") from exc
    if len(raw) < _HEADER.size:
        raise DataError(f"{path}: truncated header")
    got, nx, ny, nz, sx, sy, sz = _HEADER.unpack_from(raw)
    if got != magic:
        raise DataError(f"{path}: bad magic {got!r}, expected {magic!r}")
    try:
        geom = GridGeometry((nx, ny, nz), (sx, sy, sz))
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    expected = _HEADER.size + geom.size * itemsize * per_voxel
    if len(raw) != expected:
        raise DataError(f"{path}: size {len(raw)} bytes, expected {expected}")
    return geom, raw[_HEADER.size :]


def _write(path, header, payload):
    path = Path(path)
    try:
        path.write_bytes(header + payload)
    except OSError as exc:
        raise DataError(f"{path}: cannot write ({exc.strerror})") from exc


def write_dvol(path, vol):
    axes = vol.axes.astype("<f4")
    undefined = ~np.all(np.isfinite(axes), axis=-1)
    axes[undefined] = np.nan
    # x-fastest: transpose to (z, y, x, 3) and write C-order
    payload = np.ascontiguousarray(axes.transpose(2, 1, 0, 3)).tobytes()
    _write(path, _pack_header(DVOL_MAGIC, vol.geometry), payload)


def read_dvol(path):
    geom, payload = _read(path, DVOL_MAGIC, 4, 3)
    nx, ny, nz = geom.dims
    arr = np.frombuffer(payload, dtype="<f4").reshape(nz, ny, nx, 3)
    axes = arr.transpose(2, 1, 0, 3).astype(float)
    axes[~np.all(np.isfinite(axes), axis=-1)] = np.nan
    return DirectionVolume(geom, axes)


def write_svol(path, vol):
    payload = np.ascontiguousarray(vol.data.astype("<f4").transpose(2, 1, 0)).tobytes()
    _write(path, _pack_header(SVOL_MAGIC, vol.geometry), payload)


def read_svol(path):
    geom, payload = _read(path, SVOL_MAGIC, 4, 1)
    nx, ny, nz = geom.dims
    arr = np.frombuffer(payload, dtype="<f4").reshape(nz, ny, nx)
    return StatisticVolume(geom, arr.transpose(2, 1, 0).astype(float))


def write_mvol(path, mask):
    payload = np.ascontiguousarray(mask.data.astype(np.uint8).transpose(2, 1, 0)).tobytes()
    _write(path, _pack_header(MVOL_MAGIC, mask.geometry), payload)


def read_mvol(path):
    geom, payload = _read(path, MVOL_MAGIC, 1, 1)
    nx, ny, nz = geom.dims
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(nz, ny, nx)
    if np.any(arr > 1):
        raise DataError(f"{path}: mask bytes must be 0 or 1")
    return Mask(geom, arr.transpose(2, 1, 0).astype(bool))
