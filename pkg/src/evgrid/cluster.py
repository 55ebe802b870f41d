"""Classic dynamic-object extraction: threshold, DBSCAN, box fitting.

Cells with dynamic mass above a minimum threshold are clustered with DBSCAN
where two cells are neighbors iff they are close in position AND in
velocity.  Each cluster is fitted with its minimum-area enclosing rectangle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .grid import D, DynamicGrid
from .rotbox import Detection, RotatedBox, canonicalize

DEFAULT_M_D_MIN = 0.5
DEFAULT_EPS_D = 1.5  # m
DEFAULT_EPS_V = 3.0  # m/s
DEFAULT_EPS_N = 4  # cells


@dataclass
class ClusterParams:
    m_D_min: float = DEFAULT_M_D_MIN
    eps_d: float = DEFAULT_EPS_D
    eps_v: float = DEFAULT_EPS_V
    eps_n: int = DEFAULT_EPS_N

    def __post_init__(self):
        if min(self.m_D_min, self.eps_d, self.eps_v, self.eps_n) <= 0:
            raise ValueError("cluster parameters must be positive")


@dataclass
class DynamicCells:
    """Cells above the dynamic-mass threshold; parallel arrays."""

    centers: np.ndarray  # (N, 2) ego-frame m
    velocities: np.ndarray  # (N, 2) m/s
    m_D: np.ndarray  # (N,)

    def __len__(self):
        return len(self.m_D)


def extract_dynamic_cells(grid: DynamicGrid, m_D_min: float = DEFAULT_M_D_MIN) -> DynamicCells:
    """Cells with dynamic mass strictly above the threshold, with velocities."""
    mask = grid.masses[D] > m_D_min
    rows, cols = np.nonzero(mask)
    xs, ys = grid.geometry.cell_centers()
    centers = np.stack([xs[rows, cols], ys[rows, cols]], axis=1)
    velocities = np.stack([grid.v_mean[0, rows, cols], grid.v_mean[1, rows, cols]], axis=1)
    return DynamicCells(centers=centers, velocities=velocities, m_D=grid.masses[D][rows, cols])


def _neighbor_lists(cells: DynamicCells, params: ClusterParams) -> list[np.ndarray]:
    """Neighbors per cell: position distance <= eps_d and velocity diff <= eps_v.

    A cell is its own neighbor.
    """
    tree = cKDTree(cells.centers)
    near = tree.query_ball_tree(tree, params.eps_d)
    out = []
    for i, cand in enumerate(near):
        cand = np.asarray(cand, dtype=np.int64)
        dv = np.linalg.norm(cells.velocities[cand] - cells.velocities[i], axis=1)
        out.append(cand[dv <= params.eps_v])
    return out


def dbscan(cells: DynamicCells, params: ClusterParams) -> list[np.ndarray]:
    """DBSCAN over dynamic cells; returns sorted index arrays, one per cluster.

    Core points have at least eps_n neighbors (counting themselves).  Border
    points join the first cluster that reaches them; noise joins none.
    Clusters below eps_n cells are dropped.
    """
    n = len(cells)
    if n == 0:
        return []
    neighbors = _neighbor_lists(cells, params)
    core = np.array([len(nb) >= params.eps_n for nb in neighbors])
    label = np.full(n, -1, dtype=np.int64)
    clusters = []
    for seed in range(n):
        if label[seed] != -1 or not core[seed]:
            continue
        cid = len(clusters)
        members = [seed]
        label[seed] = cid
        queue = [seed]
        while queue:
            p = queue.pop(0)
            for q in neighbors[p]:
                if label[q] == -1:
                    label[q] = cid
                    members.append(int(q))
                    if core[q]:
                        queue.append(int(q))
        clusters.append(np.sort(np.array(members, dtype=np.int64)))
    return [c for c in clusters if len(c) >= params.eps_n]


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull, CCW, degenerate inputs allowed."""
    pts = np.unique(points, axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:  # collinear input
        return np.array([pts[0], pts[-1]])
    return hull


def min_area_rect(points: np.ndarray) -> RotatedBox:
    """Minimum-area rectangle enclosing the points (rotating calipers).

    The optimal rectangle shares a direction with a hull edge; degenerate
    point sets (single point, collinear) yield zero-extent rectangles which
    callers are expected to inflate.
    """
    points = np.asarray(points, dtype=float)
    hull = _convex_hull(points)
    if len(hull) == 1:
        return RotatedBox(hull[0, 0], hull[0, 1], 0.0, 0.0, 0.0)
    if len(hull) == 2:
        d = hull[1] - hull[0]
        c = (hull[0] + hull[1]) / 2.0
        psi = np.degrees(np.arctan2(d[1], d[0]))
        return RotatedBox(c[0], c[1], float(np.linalg.norm(d)), 0.0, float(psi))

    edges = np.roll(hull, -1, axis=0) - hull
    angles = np.arctan2(edges[:, 1], edges[:, 0])
    best = None
    for ang in angles:
        c, s = np.cos(-ang), np.sin(-ang)
        rx = c * hull[:, 0] - s * hull[:, 1]
        ry = s * hull[:, 0] + c * hull[:, 1]
        w = rx.max() - rx.min()
        h = ry.max() - ry.min()
        area = w * h
        if best is None or area < best[0]:
            cx_r, cy_r = (rx.max() + rx.min()) / 2.0, (ry.max() + ry.min()) / 2.0
            # rotate the center back to the original frame
            cx = np.cos(ang) * cx_r - np.sin(ang) * cy_r
            cy = np.sin(ang) * cx_r + np.cos(ang) * cy_r
            best = (area, cx, cy, w, h, np.degrees(ang))
    _, cx, cy, w, h, psi = best
    return RotatedBox(float(cx), float(cy), float(w), float(h), float(psi))


def fit_box(cells: DynamicCells, indices: np.ndarray, inflate: float = 0.1) -> RotatedBox:
    """Oriented box for one cluster: min-area rectangle of the cell centers
    inflated by half a cell per side."""
    if len(indices) == 0:
        raise ValueError("cluster must be non-empty")
    raw = min_area_rect(cells.centers[indices])
    return canonicalize(raw.cx, raw.cy, raw.w + 2 * inflate, raw.h + 2 * inflate, raw.psi)


def classic_detect(grid: DynamicGrid, params: ClusterParams | None = None) -> list[Detection]:
    """Threshold + DBSCAN + box fitting; the classic baseline.

    All detections carry score 1.0: the method has no confidence measure and
    contributes a single operating point to precision/recall comparisons.
    """
    params = params or ClusterParams()
    cells = extract_dynamic_cells(grid, params.m_D_min)
    inflate = grid.geometry.resolution / 2.0
    return [
        Detection(box=fit_box(cells, idx, inflate=inflate), score=1.0)
        for idx in dbscan(cells, params)
    ]
