import numpy as np
import pytest

from evgrid import gridio
from evgrid.grid import DynamicGrid, GridGeometry, encode_grid


def _random_grid(rng, rows=12, cols=16):
    grid = DynamicGrid(geometry=GridGeometry(cols=cols, rows=rows), timestamp=1.5)
    raw = rng.random((6, rows, cols)).astype(np.float32).astype(np.float64)
    grid.masses = raw / raw.sum(axis=0)
    grid.v_mean = rng.uniform(-10, 10, (2, rows, cols)).astype(np.float32).astype(np.float64)
    return grid


def test_grid_round_trip(tmp_path, rng):
    grid = _random_grid(rng)
    path = tmp_path / "frame.evgr"
    gridio.save_grid(path, grid)
    back = gridio.load_grid(path)
    assert back.geometry.cols == grid.geometry.cols
    assert back.geometry.rows == grid.geometry.rows
    assert back.geometry.resolution == pytest.approx(grid.geometry.resolution)
    assert back.timestamp == pytest.approx(grid.timestamp)
    # float32 payloads built from float32 values survive exactly
    assert np.array_equal(back.masses.astype(np.float32), grid.masses.astype(np.float32))
    assert np.array_equal(back.v_mean.astype(np.float32), grid.v_mean.astype(np.float32))


def test_tensor_round_trip(tmp_path, rng):
    grid = _random_grid(rng)
    for mode in (3, 5):
        tensor = encode_grid(grid, mode=mode)
        path = tmp_path / f"frame{mode}.evtn"
        gridio.save_tensor(path, tensor)
        back = gridio.load_tensor(path)
        assert back.channels == mode
        assert np.array_equal(back.values, tensor.values)


def test_bad_magic_rejected(tmp_path, rng):
    grid = _random_grid(rng)
    path = tmp_path / "frame.evgr"
    gridio.save_grid(path, grid)
    with pytest.raises(ValueError, match="magic"):
        gridio.load_tensor(path)


def test_truncated_header(tmp_path):
    path = tmp_path / "bad.evgr"
    path.write_bytes(b"EVGR")
    with pytest.raises(ValueError, match="truncated"):
        gridio.load_grid(path)


def test_truncated_payload(tmp_path, rng):
    grid = _random_grid(rng)
    path = tmp_path / "frame.evgr"
    gridio.save_grid(path, grid)
    data = path.read_bytes()
    path.write_bytes(data[:-17])
    with pytest.raises(ValueError, match="expected"):
        gridio.load_grid(path)


def test_wrong_plane_count(tmp_path, rng):
    grid = _random_grid(rng)
    tensor = encode_grid(grid, mode=3)
    path = tmp_path / "frame.evgr"
    # a 3-plane file with the grid magic is not a valid grid snapshot
    gridio._write(path, gridio.GRID_MAGIC, tensor.values, 0.2, 0.0)
    with pytest.raises(ValueError, match="8 planes"):
        gridio.load_grid(path)
