"""Evidential occupancy grid: belief masses, colorization, channel encoding.

Each cell carries Dempster-Shafer belief masses over the six admissible
hypotheses of the frame {F (free), S (static), D (dynamic)}:

    {F}, {S}, {D}, {S,D}, {F,D}, and Theta (unknown).

The empty set and the self-contradictory {F,S} are not representable.  All
six masses are non-negative and sum to one per cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# plane order used throughout (arrays of shape (6, rows, cols))
HYPOTHESES = ("F", "S", "D", "SD", "FD", "U")
F, S, D, SD, FD, U = range(6)

MASS_TOL = 1e-6  # tolerance on the per-cell mass sum


@dataclass(frozen=True)
class BeliefMasses:
    m_F: float = 0.0
    m_S: float = 0.0
    m_D: float = 0.0
    m_SD: float = 0.0
    m_FD: float = 0.0
    m_U: float = 1.0

    def as_array(self) -> np.ndarray:
        return np.array([self.m_F, self.m_S, self.m_D, self.m_SD, self.m_FD, self.m_U])


def validate(masses: BeliefMasses) -> str | None:
    """Return None if valid, else a description of the first violated invariant."""
    arr = masses.as_array()
    for name, m in zip(HYPOTHESES, arr):
        if not 0.0 <= m <= 1.0:
            return f"mass m_{name} = {m} outside [0,1]"
    total = float(arr.sum())
    if abs(total - 1.0) > MASS_TOL:
        return f"sum = {total:.6g}"
    return None


def colorize(masses: BeliefMasses) -> tuple[float, float, float]:
    """RGB color of a cell: one minus the mass not supporting S, F, D respectively.

    Pure hypotheses map to red (S), green (F), blue (D), magenta (SD),
    cyan (FD), white (unknown).
    """
    err = validate(masses)
    if err is not None:
        raise ValueError(f"invalid belief masses: {err}")
    r = 1.0 - (masses.m_F + masses.m_D + masses.m_FD)
    g = 1.0 - (masses.m_S + masses.m_D + masses.m_SD)
    b = 1.0 - (masses.m_F + masses.m_S)
    clamp = lambda v: min(1.0, max(0.0, v))
    return (clamp(r), clamp(g), clamp(b))


def colorize_planes(masses: np.ndarray) -> np.ndarray:
    """Vectorized colorize over mass planes (6, H, W) -> (3, H, W)."""
    r = 1.0 - (masses[F] + masses[D] + masses[FD])
    g = 1.0 - (masses[S] + masses[D] + masses[SD])
    b = 1.0 - (masses[F] + masses[S])
    return np.clip(np.stack([r, g, b]), 0.0, 1.0)


@dataclass
class GridGeometry:
    """Ego-centered lattice; the ego sits at the lattice midpoint."""

    cols: int = 500
    rows: int = 500
    resolution: float = 0.2  # meters per cell

    @property
    def origin(self) -> tuple[float, float]:
        """Ego-frame position of the outer corner of cell (0, 0)."""
        return (-self.cols * self.resolution / 2.0, -self.rows * self.resolution / 2.0)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Ego-frame x and y coordinates of cell centers, each (rows, cols)."""
        ox, oy = self.origin
        x = ox + (np.arange(self.cols) + 0.5) * self.resolution
        y = oy + (np.arange(self.rows) + 0.5) * self.resolution
        return np.broadcast_to(x, (self.rows, self.cols)), np.broadcast_to(
            y[:, None], (self.rows, self.cols)
        )

    def point_to_cell(self, x, y):
        """Ego-frame coordinates -> (row, col) index arrays (may be out of range)."""
        ox, oy = self.origin
        col = np.floor((np.asarray(x) - ox) / self.resolution).astype(np.int64)
        row = np.floor((np.asarray(y) - oy) / self.resolution).astype(np.int64)
        return row, col

    def in_bounds(self, row, col):
        return (row >= 0) & (row < self.rows) & (col >= 0) & (col < self.cols)


@dataclass
class DynamicGrid:
    """Mass planes plus per-cell velocity statistics."""

    geometry: GridGeometry = field(default_factory=GridGeometry)
    masses: np.ndarray | None = None  # (6, rows, cols) float64
    v_mean: np.ndarray | None = None  # (2, rows, cols) m/s
    v_var: np.ndarray | None = None  # (2, rows, cols) (m/s)^2
    particle_count: np.ndarray | None = None  # (rows, cols) int32
    timestamp: float = 0.0

    def __post_init__(self):
        g = self.geometry
        if self.masses is None:
            self.masses = np.zeros((6, g.rows, g.cols))
            self.masses[U] = 1.0
        if self.v_mean is None:
            self.v_mean = np.zeros((2, g.rows, g.cols))
        if self.v_var is None:
            self.v_var = np.zeros((2, g.rows, g.cols))
        if self.particle_count is None:
            self.particle_count = np.zeros((g.rows, g.cols), dtype=np.int32)

    def mass_sum_error(self) -> float:
        """Largest deviation of any cell's mass sum from one."""
        return float(np.abs(self.masses.sum(axis=0) - 1.0).max())

    def check(self):
        err = self.mass_sum_error()
        if err > MASS_TOL:
            raise ValueError(f"cell mass sums deviate from 1 by up to {err:.3g}")
        if self.masses.min() < -MASS_TOL:
            raise ValueError("negative belief mass")


@dataclass
class ChannelTensor:
    """Dense detector input, channels-first (3 or 5, rows, cols), values in [0,1]."""

    values: np.ndarray
    resolution: float
    timestamp: float = 0.0

    @property
    def channels(self) -> int:
        return self.values.shape[0]


def encode_grid(grid: DynamicGrid, mode: int = 3, v_max: float = 30.0) -> ChannelTensor:
    """Encode the grid as a 3- or 5-channel tensor.

    Channels 0-2 are the RGB colorization.  In 5-channel mode, channels 3-4
    encode the mean velocity components mapped affinely so that -v_max -> 0,
    0 -> 0.5 and +v_max -> 1 (clamped).
    """
    if mode not in (3, 5):
        raise ValueError(f"mode must be 3 or 5, got {mode}")
    if v_max <= 0:
        raise ValueError("v_max must be positive")
    rgb = colorize_planes(grid.masses)
    if mode == 3:
        values = rgb
    else:
        vel = 0.5 + np.clip(grid.v_mean / v_max, -1.0, 1.0) / 2.0
        values = np.concatenate([rgb, vel], axis=0)
    return ChannelTensor(
        values=values.astype(np.float32),
        resolution=grid.geometry.resolution,
        timestamp=grid.timestamp,
    )


def decode_velocity(tensor: ChannelTensor, v_max: float = 30.0) -> np.ndarray:
    """Recover clamped velocities from channels 3-4 of a 5-channel tensor."""
    if tensor.channels != 5:
        raise ValueError("velocity decoding needs a 5-channel tensor")
    return (tensor.values[3:5].astype(np.float64) - 0.5) * 2.0 * v_max
