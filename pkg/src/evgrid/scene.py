"""Scripted 2-D scenes and synthetic LiDAR.

A scene script describes an ego trajectory plus entities (movers, static
structure, swaying vegetation, structure that appears mid-sequence).  The
world is purely planar; footprints are rotated rectangles.  Scans are
ray-cast against footprint polygons in the ego frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .rotbox import RotatedBox, canonicalize, corners

MOVER = "mover"
STATIC = "static_structure"
VEGETATION = "vegetation_clutter"
APPEARING = "appearing_structure"

_KINDS = (MOVER, STATIC, VEGETATION, APPEARING)


@dataclass(frozen=True)
class TimedPose:
    t: float
    x: float
    y: float
    heading: float = 0.0  # degrees


@dataclass
class Entity:
    kind: str
    footprint: RotatedBox
    trajectory: list[TimedPose] | None = None  # movers only
    jitter_amplitude: float = 0.0  # vegetation only, meters
    jitter_period: float = 1.0  # vegetation only, seconds
    reveal_time: float = 0.0  # appearing structure only, seconds

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown entity kind {self.kind!r}")
        if self.kind == MOVER:
            if not self.trajectory or len(self.trajectory) < 2:
                raise ValueError("movers need at least 2 trajectory poses")
        if self.jitter_amplitude < 0:
            raise ValueError("jitter_amplitude must be >= 0")


@dataclass
class SceneScript:
    name: str
    duration: float
    tick_rate: float = 10.0
    ego: list[TimedPose] = field(default_factory=lambda: [TimedPose(0, 0, 0, 0)])
    entities: list[Entity] = field(default_factory=list)

    def __post_init__(self):
        if self.tick_rate <= 0:
            raise ValueError("tick_rate must be positive")
        for poses in [self.ego] + [e.trajectory for e in self.entities if e.trajectory]:
            ts = [p.t for p in poses]
            if ts != sorted(ts):
                raise ValueError("trajectory poses must be time-sorted")

    @property
    def frame_times(self) -> np.ndarray:
        """Fusion frame times: one tick after start through the duration."""
        n = int(round(self.duration * self.tick_rate))
        return (np.arange(n) + 1) / self.tick_rate


def interpolate_pose(poses: list[TimedPose], t: float) -> TimedPose:
    """Piecewise-linear interpolation; clamped outside the keyed range."""
    if t <= poses[0].t:
        p = poses[0]
        return TimedPose(t, p.x, p.y, p.heading)
    if t >= poses[-1].t:
        p = poses[-1]
        return TimedPose(t, p.x, p.y, p.heading)
    for a, b in zip(poses, poses[1:]):
        if a.t <= t <= b.t:
            u = 0.0 if b.t == a.t else (t - a.t) / (b.t - a.t)
            return TimedPose(
                t,
                a.x + u * (b.x - a.x),
                a.y + u * (b.y - a.y),
                a.heading + u * (b.heading - a.heading),
            )
    raise AssertionError("unreachable")


def trajectory_velocity(poses: list[TimedPose], t: float) -> tuple[float, float]:
    """Velocity of the piecewise-linear trajectory at t (right-continuous)."""
    if t < poses[0].t or t >= poses[-1].t:
        return (0.0, 0.0)
    for a, b in zip(poses, poses[1:]):
        if a.t <= t < b.t:
            dt = b.t - a.t
            if dt == 0:
                return (0.0, 0.0)
            return ((b.x - a.x) / dt, (b.y - a.y) / dt)
    return (0.0, 0.0)


@dataclass
class PlacedEntity:
    index: int
    kind: str
    box: RotatedBox  # world frame
    velocity: tuple[float, float]


@dataclass
class WorldState:
    t: float
    entities: list[PlacedEntity]


def step_scene(script: SceneScript, t: float) -> WorldState:
    """Entity placement at time t.

    Movers follow their interpolated trajectory; vegetation breathes by the
    jitter displacement along its outward normal; appearing structure is
    absent before its reveal time.
    """
    if not 0.0 <= t <= script.duration + 1e-9:
        raise ValueError(f"t={t} outside [0, {script.duration}]")
    placed = []
    for i, e in enumerate(script.entities):
        fp = e.footprint
        if e.kind == MOVER:
            pose = interpolate_pose(e.trajectory, t)
            rad = math.radians(pose.heading)
            c, s = math.cos(rad), math.sin(rad)
            cx = pose.x + c * fp.cx - s * fp.cy
            cy = pose.y + s * fp.cx + c * fp.cy
            box = canonicalize(cx, cy, fp.w, fp.h, fp.psi + pose.heading)
            vel = trajectory_velocity(e.trajectory, t)
        elif e.kind == VEGETATION:
            d = e.jitter_amplitude * math.sin(2.0 * math.pi * t / e.jitter_period)
            w = max(fp.w + 2.0 * d, 0.02)
            h = max(fp.h + 2.0 * d, 0.02)
            box = canonicalize(fp.cx, fp.cy, w, h, fp.psi)
            vel = (0.0, 0.0)
        elif e.kind == APPEARING:
            if t < e.reveal_time:
                continue
            box = fp
            vel = (0.0, 0.0)
        else:
            box = fp
            vel = (0.0, 0.0)
        placed.append(PlacedEntity(index=i, kind=e.kind, box=box, velocity=vel))
    return WorldState(t=t, entities=placed)


@dataclass
class LidarScan:
    timestamp: float
    azimuths: np.ndarray  # radians, ego frame, strictly increasing
    ranges: np.ndarray  # meters
    hit: np.ndarray  # bool
    hit_entity: np.ndarray  # entity index, -1 when no hit
    max_range: float


def raycast(
    world: WorldState,
    ego: TimedPose,
    beam_count: int = 720,
    max_range: float = 50.0,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> LidarScan:
    """Cast one revolution of beams from the ego pose.

    Each beam reports the nearest footprint-edge intersection or a no-hit at
    max_range.  Optional Gaussian range noise on hits.
    """
    if beam_count < 1:
        raise ValueError("beam_count must be >= 1")
    azimuths = np.arange(beam_count) * (2.0 * math.pi / beam_count)
    heading = math.radians(ego.heading)
    world_angles = azimuths + heading
    dirs = np.stack([np.cos(world_angles), np.sin(world_angles)], axis=1)  # (B, 2)
    origin = np.array([ego.x, ego.y])

    ranges = np.full(beam_count, max_range)
    hit_entity = np.full(beam_count, -1, dtype=np.int64)

    if world.entities:
        edges_p, edges_q, edge_owner = [], [], []
        for pe in world.entities:
            poly = corners(pe.box)
            for k in range(4):
                edges_p.append(poly[k])
                edges_q.append(poly[(k + 1) % 4])
                edge_owner.append(pe.index)
        P = np.array(edges_p)  # (E, 2)
        Q = np.array(edges_q)
        owner = np.array(edge_owner)
        E = Q - P

        # o + t*d = p + s*e ; cross-product solve, broadcast beams x edges
        po = P[None, :, :] - origin[None, None, :]  # (1, E, 2)
        denom = dirs[:, None, 0] * E[None, :, 1] - dirs[:, None, 1] * E[None, :, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            tt = (po[:, :, 0] * E[None, :, 1] - po[:, :, 1] * E[None, :, 0]) / denom
            ss = (po[:, :, 0] * dirs[:, None, 1] - po[:, :, 1] * dirs[:, None, 0]) / denom
        valid = (np.abs(denom) > 1e-12) & (tt > 1e-9) & (ss >= -1e-12) & (ss <= 1 + 1e-12)
        tt = np.where(valid, tt, np.inf)
        best = np.argmin(tt, axis=1)
        best_t = tt[np.arange(beam_count), best]
        mask = best_t < max_range
        ranges[mask] = best_t[mask]
        hit_entity[mask] = owner[best[mask]]

    hit = hit_entity >= 0
    if noise_sigma > 0 and hit.any():
        if rng is None:
            rng = np.random.default_rng(0)
        ranges = ranges.copy()
        ranges[hit] = np.clip(
            ranges[hit] + rng.normal(0.0, noise_sigma, int(hit.sum())), 0.01, max_range
        )
    return LidarScan(
        timestamp=world.t,
        azimuths=azimuths,
        ranges=ranges,
        hit=hit,
        hit_entity=hit_entity,
        max_range=max_range,
    )


def world_to_ego(box: RotatedBox, ego: TimedPose) -> RotatedBox:
    rad = math.radians(ego.heading)
    c, s = math.cos(rad), math.sin(rad)
    dx, dy = box.cx - ego.x, box.cy - ego.y
    return canonicalize(c * dx + s * dy, -s * dx + c * dy, box.w, box.h, box.psi - ego.heading)


def ground_truth(
    world: WorldState,
    ego: TimedPose,
    scan: LidarScan,
    v_gt_min: float = 0.5,
) -> list[RotatedBox]:
    """Ego-frame boxes of movers that are fast enough and visible this frame.

    An object counts as visible when at least one beam hits it.  Static and
    clutter entities never yield boxes.  The minimum speed is a configuration
    knob; no canonical value exists for when an object counts as dynamic.
    """
    boxes = []
    for pe in world.entities:
        if pe.kind != MOVER:
            continue
        speed = math.hypot(*pe.velocity)
        if speed <= v_gt_min:
            continue
        if not np.any(scan.hit_entity == pe.index):
            continue
        boxes.append(world_to_ego(pe.box, ego))
    return boxes


# ---------------------------------------------------------------------------
# script files: human-editable YAML


def _pose_to_dict(p: TimedPose) -> dict:
    return {"t": p.t, "x": p.x, "y": p.y, "heading": p.heading}


def _pose_from_dict(d: dict) -> TimedPose:
    return TimedPose(
        t=float(d["t"]), x=float(d["x"]), y=float(d["y"]), heading=float(d.get("heading", 0.0))
    )


def _box_to_dict(b: RotatedBox) -> dict:
    return {"cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h, "psi": b.psi}


def _box_from_dict(d: dict) -> RotatedBox:
    return canonicalize(
        float(d.get("cx", 0.0)),
        float(d.get("cy", 0.0)),
        float(d["w"]),
        float(d["h"]),
        float(d.get("psi", 0.0)),
    )


def save_script(path, script: SceneScript):
    doc = {
        "name": script.name,
        "duration": script.duration,
        "tick_rate": script.tick_rate,
        "ego": [_pose_to_dict(p) for p in script.ego],
        "entities": [],
    }
    for e in script.entities:
        ed = {"kind": e.kind, "footprint": _box_to_dict(e.footprint)}
        if e.trajectory:
            ed["trajectory"] = [_pose_to_dict(p) for p in e.trajectory]
        if e.kind == VEGETATION:
            ed["jitter_amplitude"] = e.jitter_amplitude
            ed["jitter_period"] = e.jitter_period
        if e.kind == APPEARING:
            ed["reveal_time"] = e.reveal_time
        doc["entities"].append(ed)
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))


def load_script(path) -> SceneScript:
    doc = yaml.safe_load(Path(path).read_text())
    entities = []
    for ed in doc.get("entities", []):
        entities.append(
            Entity(
                kind=ed["kind"],
                footprint=_box_from_dict(ed["footprint"]),
                trajectory=[_pose_from_dict(p) for p in ed["trajectory"]]
                if "trajectory" in ed
                else None,
                jitter_amplitude=float(ed.get("jitter_amplitude", 0.0)),
                jitter_period=float(ed.get("jitter_period", 1.0)),
                reveal_time=float(ed.get("reveal_time", 0.0)),
            )
        )
    return SceneScript(
        name=doc.get("name", Path(path).stem),
        duration=float(doc["duration"]),
        tick_rate=float(doc.get("tick_rate", 10.0)),
        ego=[_pose_from_dict(p) for p in doc["ego"]],
        entities=entities,
    )
