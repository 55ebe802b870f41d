"""Binary snapshot formats for grids ("EVGR") and channel tensors ("EVTN").

Layout (little-endian):
    magic       4 bytes  b"EVGR" or b"EVTN"
    version     u16
    cols        u32
    rows        u32
    resolution  f32
    timestamp   f64
    planes      u8
then `planes` row-major float32 planes of rows*cols values each.

EVGR stores 8 planes: m_F, m_S, m_D, m_SD, m_FD, m_U, vx, vy.
EVTN stores the tensor channels (3 or 5).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import ChannelTensor, DynamicGrid, GridGeometry

_HEADER = struct.Struct("<4sHIIfdB")
FORMAT_VERSION = 1

GRID_MAGIC = b"EVGR"
TENSOR_MAGIC = b"EVTN"


def _write(path, magic: bytes, planes: np.ndarray, resolution: float, timestamp: float):
    n, rows, cols = planes.shape
    header = _HEADER.pack(magic, FORMAT_VERSION, cols, rows, float(resolution), float(timestamp), n)
    data = np.ascontiguousarray(planes, dtype="<f4")
    with open(path, "wb") as f:
        f.write(header)
        f.write(data.tobytes())


def _read(path, magic: bytes):
    with open(path, "rb") as f:
        raw = f.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        got, version, cols, rows, resolution, timestamp, n = _HEADER.unpack(raw)
        if got != magic:
            raise ValueError(f"{path}: bad magic {got!r}, expected {magic!r}")
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        body = f.read()
    expected = n * rows * cols
    if len(body) != 4 * expected:
        raise ValueError(f"{path}: expected {expected} values, found {len(body) / 4:g}")
    payload = np.frombuffer(body, dtype="<f4")
    return payload.reshape(n, rows, cols), cols, rows, resolution, timestamp


def save_grid(path, grid: DynamicGrid):
    planes = np.concatenate([grid.masses, grid.v_mean], axis=0)
    _write(path, GRID_MAGIC, planes, grid.geometry.resolution, grid.timestamp)


def load_grid(path) -> DynamicGrid:
    planes, cols, rows, resolution, timestamp = _read(path, GRID_MAGIC)
    if planes.shape[0] != 8:
        raise ValueError(f"{path}: grid snapshot needs 8 planes, found {planes.shape[0]}")
    geom = GridGeometry(cols=cols, rows=rows, resolution=resolution)
    return DynamicGrid(
        geometry=geom,
        masses=planes[:6].astype(np.float64),
        v_mean=planes[6:8].astype(np.float64),
        timestamp=timestamp,
    )


def save_tensor(path, tensor: ChannelTensor):
    _write(path, TENSOR_MAGIC, tensor.values, tensor.resolution, tensor.timestamp)


def load_tensor(path) -> ChannelTensor:
    planes, _cols, _rows, resolution, timestamp = _read(path, TENSOR_MAGIC)
    if planes.shape[0] not in (3, 5):
        raise ValueError(f"{path}: tensor needs 3 or 5 channels, found {planes.shape[0]}")
    return ChannelTensor(values=planes, resolution=resolution, timestamp=timestamp)


def grid_files(directory) -> list[Path]:
    return sorted(Path(directory).glob("*.evgr"))


def tensor_files(directory) -> list[Path]:
    return sorted(Path(directory).glob("*.evtn"))
