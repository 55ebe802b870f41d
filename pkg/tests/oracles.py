"""Independent reference implementations used to check the fast paths.

Everything here is deliberately slow and simple: Monte-Carlo rasterization
for rotated IoU, exhaustive neighbor graphs for clustering, brute-force
angle sweeps for minimum-area rectangles, and fine-step ray marching for
the LiDAR geometry.
"""

from __future__ import annotations

import math

import numpy as np

from evgrid.rotbox import RotatedBox, corners


def _inside(box: RotatedBox, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    rad = math.radians(box.psi)
    c, s = math.cos(rad), math.sin(rad)
    dx, dy = px - box.cx, py - box.cy
    u = c * dx + s * dy
    v = -s * dx + c * dy
    return (np.abs(u) <= box.w / 2) & (np.abs(v) <= box.h / 2)


def mc_iou(a: RotatedBox, b: RotatedBox, samples: int, rng: np.random.Generator) -> float:
    """IoU by uniform sampling over the joint bounding box."""
    pts = np.concatenate([corners(a), corners(b)])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    px = rng.uniform(lo[0], hi[0], samples)
    py = rng.uniform(lo[1], hi[1], samples)
    in_a = _inside(a, px, py)
    in_b = _inside(b, px, py)
    union = int((in_a | in_b).sum())
    if union == 0:
        return 0.0
    return int((in_a & in_b).sum()) / union


def brute_dbscan(
    centers: np.ndarray, velocities: np.ndarray, eps_d: float, eps_v: float, eps_n: int
) -> list[tuple[int, ...]]:
    """Reference DBSCAN: full O(n^2) neighbor graph + connected components.

    Core points (>= eps_n neighbors, self included) connect into components;
    border points join the earliest-created component that has them as a
    neighbor, matching the scan-order convention of the fast implementation.
    """
    n = len(centers)
    if n == 0:
        return []
    dd = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=2)
    dv = np.linalg.norm(velocities[:, None, :] - velocities[None, :, :], axis=2)
    adj = (dd <= eps_d) & (dv <= eps_v)
    core = adj.sum(axis=1) >= eps_n

    label = [-1] * n
    clusters: list[list[int]] = []
    for seed in range(n):
        if label[seed] != -1 or not core[seed]:
            continue
        cid = len(clusters)
        comp = [seed]
        label[seed] = cid
        frontier = [seed]
        while frontier:
            p = frontier.pop()
            for q in range(n):
                if adj[p][q] and label[q] == -1:
                    label[q] = cid
                    comp.append(q)
                    if core[q]:
                        frontier.append(q)
        clusters.append(sorted(comp))
    return [tuple(c) for c in clusters if len(c) >= eps_n]


def sweep_min_area(points: np.ndarray, step_deg: float = 0.1) -> float:
    """Minimum enclosing-rectangle area by exhaustive angle sweep."""
    points = np.asarray(points, dtype=float)
    best = math.inf
    for ang in np.arange(0.0, 90.0, step_deg):
        rad = math.radians(ang)
        c, s = math.cos(rad), math.sin(rad)
        u = c * points[:, 0] + s * points[:, 1]
        v = -s * points[:, 0] + c * points[:, 1]
        area = (u.max() - u.min()) * (v.max() - v.min())
        if area < best:
            best = area
    return best


def march_ray(
    boxes: list[RotatedBox], azimuth: float, max_range: float, step: float = 0.001
) -> float:
    """First entity contact along a ray from the origin, by fine marching."""
    d = np.arange(step, max_range, step)
    px = math.cos(azimuth) * d
    py = math.sin(azimuth) * d
    hit = np.zeros(len(d), dtype=bool)
    for box in boxes:
        hit |= _inside(box, px, py)
    idx = np.flatnonzero(hit)
    return float(d[idx[0]]) if len(idx) else max_range
