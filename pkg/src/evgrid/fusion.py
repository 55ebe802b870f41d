"""Recursive evidential fusion of LiDAR scans into a dynamic grid.

Per frame: the grid is re-anchored to the new ego pose and discounted toward
unknown, the scan is converted to per-cell measurement masses on {F}, {S,D}
and Theta, the masses are combined with Dempster's rule, and a particle
population supplies per-cell velocity statistics plus the split of the
ambiguous {S,D} mass into static and dynamic evidence.

A sensor cannot observe "dynamic" directly; dynamic evidence only emerges
from particles that persist inside occupied cells across frames.  This also
reproduces the known failure modes of such filters: newly appearing or
swaying structure briefly sustains spurious particle support.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import D, DynamicGrid, F, FD, GridGeometry, S, SD, U
from .scene import LidarScan

logger = logging.getLogger(__name__)


@dataclass
class FusionConfig:
    p_free: float = 0.9  # free evidence along a beam
    p_occ: float = 0.9  # occupied evidence at a beam hit
    persistence_decay: float = 0.98  # per-frame discount toward unknown
    birth_per_cell: int = 10  # particles born per newly occupied cell
    birth_rise_min: float = 0.05  # occupied-mass rise that triggers birth
    birth_weight: float = 0.1  # newborn cohort weight as a fraction of the mass rise
    sigma_pos: float = 0.1  # process noise, position, m
    sigma_vel: float = 0.3  # process noise, velocity, m/s
    resample_threshold: float = 0.8  # resample when ESS < threshold * N
    resample_min: int = 3000  # population floor after resampling
    particles_max: int = 200_000
    v_birth_max: float = 15.0  # newborn speed bound, m/s
    support_floor: float = 0.2  # epsilon in the persistent-weight ratio
    persistent_min_age: int = 2  # frames a particle must survive to count

    def __post_init__(self):
        if not 0.0 <= self.persistence_decay <= 1.0:
            raise ValueError("persistence_decay must be in [0,1]")
        for name in ("p_free", "p_occ", "sigma_pos", "sigma_vel", "support_floor"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass
class ParticleSet:
    """Struct-of-arrays particle population in the ego frame."""

    pos: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    vel: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    weight: np.ndarray = field(default_factory=lambda: np.empty(0))
    age: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __len__(self):
        return len(self.weight)


@dataclass
class MeasurementGrid:
    """Per-cell measurement masses; z_U = 1 - z_F - z_O."""

    z_F: np.ndarray
    z_O: np.ndarray

    @property
    def z_U(self) -> np.ndarray:
        return 1.0 - self.z_F - self.z_O


def measurement_grid(
    scan: LidarScan, geom: GridGeometry, p_free: float = 0.9, p_occ: float = 0.9
) -> MeasurementGrid:
    """Inverse sensor model: sample free space along beams, mark hit cells.

    Cells claimed both free and occupied by different beams take the per-cell
    maximum of each claim and are renormalized with z_U as the remainder.
    """
    z_F = np.zeros((geom.rows, geom.cols))
    z_O = np.zeros((geom.rows, geom.cols))
    res = geom.resolution
    # just under one cell per step: every cell a ray crosses by more than a
    # corner clip gets sampled, at half the cost of half-cell stepping
    step = 0.95 * res

    cos_a = np.cos(scan.azimuths)
    sin_a = np.sin(scan.azimuths)

    # free space: sample each ray at half-cell steps, stopping short of the
    # hit by more than a cell diagonal so that oblique beams never claim the
    # hit cell (or its immediate surface neighbors) free
    free_limit = np.where(scan.hit, scan.ranges - 1.5 * res, scan.max_range)
    n_steps = int(math.ceil(scan.max_range / step))
    d = (np.arange(n_steps) + 0.5) * step  # (N,)
    within = d[None, :] < free_limit[:, None]  # (B, N)
    px = cos_a[:, None] * d[None, :]
    py = sin_a[:, None] * d[None, :]
    rows, cols = geom.point_to_cell(px[within], py[within])
    ok = geom.in_bounds(rows, cols)
    z_F[rows[ok], cols[ok]] = p_free

    # occupied: the cell containing each hit
    if scan.hit.any():
        hx = cos_a[scan.hit] * scan.ranges[scan.hit]
        hy = sin_a[scan.hit] * scan.ranges[scan.hit]
        rows, cols = geom.point_to_cell(hx, hy)
        ok = geom.in_bounds(rows, cols)
        z_O[rows[ok], cols[ok]] = p_occ

    total = z_F + z_O
    over = total > 1.0
    if over.any():
        z_F[over] /= total[over]
        z_O[over] /= total[over]
    return MeasurementGrid(z_F=z_F, z_O=z_O)


def predict(
    grid: DynamicGrid,
    particles: ParticleSet,
    dpose: tuple[float, float, float],
    dt: float,
    config: FusionConfig,
    rng: np.random.Generator,
) -> None:
    """Re-anchor the grid to the new ego pose, discount, and advect particles.

    ``dpose`` is the ego motion (dx, dy, dheading_deg) expressed in the
    previous ego frame.  Grid content is shifted by nearest-cell lookup;
    cells shifted in from outside become unknown.  In-place.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    dx, dy, dpsi = dpose
    geom = grid.geometry

    if dx != 0.0 or dy != 0.0 or dpsi != 0.0:
        rad = math.radians(dpsi)
        c, s = math.cos(rad), math.sin(rad)
        xn, yn = geom.cell_centers()
        # position of each new cell center in the previous ego frame
        x_old = c * xn - s * yn + dx
        y_old = s * xn + c * yn + dy
        r_old, c_old = geom.point_to_cell(x_old, y_old)
        inb = geom.in_bounds(r_old, c_old)
        r_cl = np.clip(r_old, 0, geom.rows - 1)
        c_cl = np.clip(c_old, 0, geom.cols - 1)

        sampled = grid.masses[:, r_cl, c_cl]
        sampled[:, ~inb] = 0.0
        sampled[U][~inb] = 1.0
        grid.masses = sampled
        for plane in ("v_mean", "v_var"):
            arr = getattr(grid, plane)[:, r_cl, c_cl]
            arr[:, ~inb] = 0.0
            setattr(grid, plane, arr)
        counts = grid.particle_count[r_cl, c_cl]
        counts[~inb] = 0
        grid.particle_count = counts

        if len(particles):
            # into the new ego frame: undo the ego motion
            px = particles.pos[:, 0] - dx
            py = particles.pos[:, 1] - dy
            particles.pos = np.stack([c * px + s * py, -s * px + c * py], axis=1)
            vx, vy = particles.vel[:, 0], particles.vel[:, 1]
            particles.vel = np.stack([c * vx + s * vy, -s * vx + c * vy], axis=1)

    alpha = config.persistence_decay
    grid.masses[:U] *= alpha
    grid.masses[U] = 1.0 - grid.masses[:U].sum(axis=0)

    if len(particles):
        particles.pos = particles.pos + particles.vel * dt
        particles.pos = particles.pos + rng.normal(0.0, config.sigma_pos, particles.pos.shape)
        particles.vel = particles.vel + rng.normal(0.0, config.sigma_vel, particles.vel.shape)
        particles.age = particles.age + 1


def combine(masses: np.ndarray, meas: MeasurementGrid) -> tuple[np.ndarray, np.ndarray]:
    """Dempster's rule of the prior planes with the measurement masses.

    Returns (posterior planes, conflict K per cell).  Totally conflicting
    cells are reset to unknown.
    """
    z_F, z_O = meas.z_F, meas.z_O
    z_U = meas.z_U
    m = masses
    K = m[F] * z_O + (m[S] + m[D] + m[SD]) * z_F

    out = np.empty_like(m)
    out[F] = m[F] * (z_F + z_U) + (m[FD] + m[U]) * z_F
    out[S] = m[S] * (z_O + z_U)
    out[D] = m[D] * (z_O + z_U) + m[FD] * z_O
    out[SD] = m[SD] * (z_O + z_U) + m[U] * z_O
    out[FD] = m[FD] * z_U
    out[U] = m[U] * z_U

    denom = 1.0 - K
    total_conflict = denom <= 1e-9
    n_reset = int(total_conflict.sum())
    if n_reset:
        logger.warning("%d cells in total conflict, reset to unknown", n_reset)
        denom = np.where(total_conflict, 1.0, denom)
    out /= denom
    if n_reset:
        out[:, total_conflict] = 0.0
        out[U][total_conflict] = 1.0
    return out, K


def _systematic_resample(weights: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    positions = (rng.random() + np.arange(n)) / n
    cum = np.cumsum(weights)
    cum /= cum[-1]
    return np.searchsorted(cum, positions)


def particle_update(
    grid: DynamicGrid,
    particles: ParticleSet,
    occ_before: np.ndarray,
    config: FusionConfig,
    rng: np.random.Generator,
) -> ParticleSet:
    """Weight, birth, resample, and derive per-cell velocity statistics.

    Must run after `combine`.  Splits each cell's {S,D} mass according to the
    fraction of persistent particle weight it holds: cells whose support
    comes from particles that survived earlier frames shed mass to {D},
    unsupported cells shed it to {S}.
    """
    geom = grid.geometry
    occ_after = grid.masses[D] + grid.masses[SD] + grid.masses[S]

    # weight update by occupied evidence; particles outside the grid die
    if len(particles):
        row, col = geom.point_to_cell(particles.pos[:, 0], particles.pos[:, 1])
        inb = geom.in_bounds(row, col)
        r_cl = np.clip(row, 0, geom.rows - 1)
        c_cl = np.clip(col, 0, geom.cols - 1)
        particles.weight = particles.weight * np.where(inb, occ_after[r_cl, c_cl], 0.0)

    # birth in cells whose occupied mass rose this frame
    rise = occ_after - occ_before
    birth_cells = np.argwhere(rise > config.birth_rise_min)
    if len(birth_cells):
        nb = config.birth_per_cell
        n_new = nb * len(birth_cells)
        ox, oy = geom.origin
        res = geom.resolution
        base = np.repeat(birth_cells, nb, axis=0).astype(float)
        pos = np.stack(
            [
                ox + (base[:, 1] + rng.random(n_new)) * res,
                oy + (base[:, 0] + rng.random(n_new)) * res,
            ],
            axis=1,
        )
        speed = config.v_birth_max * np.sqrt(rng.random(n_new))
        angle = rng.uniform(0.0, 2.0 * math.pi, n_new)
        vel = np.stack([speed * np.cos(angle), speed * np.sin(angle)], axis=1)
        # newborns carry a damped share of the newly appeared occupied mass so
        # that persistent, velocity-consistent particles keep the upper hand
        w_new = np.repeat(
            config.birth_weight * rise[birth_cells[:, 0], birth_cells[:, 1]] / nb, nb
        )
        particles = ParticleSet(
            pos=np.concatenate([particles.pos, pos]),
            vel=np.concatenate([particles.vel, vel]),
            weight=np.concatenate([particles.weight, w_new]),
            age=np.concatenate([particles.age, np.zeros(n_new, dtype=np.int64)]),
        )

    # drop weightless particles, enforce the budget
    alive = particles.weight > 0.0
    if not alive.all():
        particles = _take(particles, np.flatnonzero(alive))
    if len(particles) > config.particles_max:
        order = np.lexsort((-particles.age, particles.weight))
        drop = len(particles) - config.particles_max
        logger.info("particle budget exceeded, culling %d lowest-weight particles", drop)
        particles = _take(particles, np.sort(order[drop:]))

    # resample on low effective sample size; newborns are exempt so that a
    # fresh velocity hypothesis always survives its first weighting round
    n = len(particles)
    w_sum = particles.weight.sum()
    if n and w_sum > 0:
        ess = w_sum * w_sum / np.square(particles.weight).sum()
        if ess < config.resample_threshold * n:
            old = np.flatnonzero(particles.age > 0)
            if len(old):
                # resampling to a population floor keeps low-weight minority
                # cohorts alive: a share of 1/floor still earns a copy
                ntar = min(max(len(old), config.resample_min), config.particles_max)
                w_old = particles.weight[old]
                idx = old[_systematic_resample(w_old, ntar, rng)]
                resampled = _take(particles, idx)
                resampled.weight = np.full(ntar, w_old.sum() / ntar)
                newborn = _take(particles, np.flatnonzero(particles.age == 0))
                particles = ParticleSet(
                    pos=np.concatenate([resampled.pos, newborn.pos]),
                    vel=np.concatenate([resampled.vel, newborn.vel]),
                    weight=np.concatenate([resampled.weight, newborn.weight]),
                    age=np.concatenate([resampled.age, newborn.age]),
                )

    # per-cell statistics
    stats_shape = (geom.rows, geom.cols)
    w_tot = np.zeros(stats_shape)
    w_persist = np.zeros(stats_shape)
    v_mean = np.zeros((2,) + stats_shape)
    v_var = np.zeros((2,) + stats_shape)
    count = np.zeros(stats_shape, dtype=np.int32)
    if len(particles):
        row, col = geom.point_to_cell(particles.pos[:, 0], particles.pos[:, 1])
        inb = geom.in_bounds(row, col)
        flat = (row[inb] * geom.cols + col[inb]).astype(np.int64)
        w = particles.weight[inb]
        size = geom.rows * geom.cols
        w_tot = np.bincount(flat, weights=w, minlength=size).reshape(stats_shape)
        persist = particles.age[inb] >= config.persistent_min_age
        w_persist = np.bincount(
            flat[persist], weights=w[persist], minlength=size
        ).reshape(stats_shape)
        count = np.bincount(flat, minlength=size).reshape(stats_shape).astype(np.int32)
        # velocity statistics favor the persistent cohort; freshly born
        # particles carry random velocities and would only smear the mean
        use_persist = w_persist > 0
        w_stat = np.where(persist, w, 0.0)
        w_stat_cell = np.where(use_persist, w_persist, w_tot)
        w_stat = np.where(use_persist[row[inb], col[inb]], w_stat, w)
        denom = np.where(w_stat_cell > 0, w_stat_cell, 1.0)
        for k in range(2):
            vk = particles.vel[inb, k]
            v_mean[k] = np.bincount(flat, weights=w_stat * vk, minlength=size).reshape(stats_shape)
            v_mean[k] /= denom
            v_var[k] = np.bincount(
                flat, weights=w_stat * vk * vk, minlength=size
            ).reshape(stats_shape)
            v_var[k] = np.maximum(v_var[k] / denom - np.square(v_mean[k]), 0.0)
        empty = w_tot <= 0
        v_mean[:, empty] = 0.0
        v_var[:, empty] = 0.0

    # split ambiguous occupancy by persistent support; the static drift only
    # applies to the share of occupancy already present before this frame
    support = float(grid.masses[D].sum() + grid.masses[SD].sum())
    rho = w_persist / (w_tot + config.support_floor)
    unchanged = np.clip(occ_before / (occ_after + 1e-9), 0.0, 1.0)
    m_sd = grid.masses[SD]
    to_dynamic = rho * m_sd
    remainder = m_sd - to_dynamic
    to_static = (1.0 - rho) * remainder * unchanged
    grid.masses[D] += to_dynamic
    grid.masses[S] += to_static
    grid.masses[SD] = remainder - to_static

    grid.v_mean = v_mean
    grid.v_var = v_var
    grid.particle_count = count

    # keep total particle weight commensurate with the dynamic support
    w_sum = particles.weight.sum()
    if len(particles) and w_sum > 0 and support > 0:
        particles.weight = particles.weight * (support / w_sum)
    return particles


def _take(p: ParticleSet, idx: np.ndarray) -> ParticleSet:
    return ParticleSet(pos=p.pos[idx], vel=p.vel[idx], weight=p.weight[idx], age=p.age[idx])


def fuse_frame(
    grid: DynamicGrid,
    particles: ParticleSet,
    scan: LidarScan,
    dpose: tuple[float, float, float],
    dt: float,
    config: FusionConfig,
    rng: np.random.Generator,
) -> ParticleSet:
    """One full fusion step: predict, measure, combine, particle update."""
    predict(grid, particles, dpose, dt, config, rng)
    occ_before = grid.masses[D] + grid.masses[SD] + grid.masses[S]
    meas = measurement_grid(scan, grid.geometry, config.p_free, config.p_occ)
    grid.masses, _conflict = combine(grid.masses, meas)
    particles = particle_update(grid, particles, occ_before, config, rng)
    grid.timestamp += dt
    return particles


class FusionPipeline:
    """Owns one (grid, particles) pair and fuses scans frame by frame."""

    def __init__(
        self,
        geometry: GridGeometry | None = None,
        config: FusionConfig | None = None,
        seed: int = 0,
    ):
        self.geometry = geometry or GridGeometry()
        self.config = config or FusionConfig()
        self.rng = np.random.default_rng(seed)
        self.grid = DynamicGrid(geometry=self.geometry)
        self.particles = ParticleSet()

    def step(self, scan: LidarScan, dpose=(0.0, 0.0, 0.0), dt: float = 0.1) -> DynamicGrid:
        self.particles = fuse_frame(
            self.grid, self.particles, scan, dpose, dt, self.config, self.rng
        )
        return self.grid
