"""Rotated bounding boxes: canonical form, corner geometry, and exact IoU.

A box is parameterized by its center, width ``w``, height ``h`` and the angle
``psi`` (degrees) between the w-side and the positive x-axis.  The canonical
representation enforces ``w >= h`` and ``psi`` in [-90, 90).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RotatedBox:
    cx: float
    cy: float
    w: float
    h: float
    psi: float  # degrees, in [-90, 90) once canonical

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class Detection:
    box: RotatedBox
    score: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0,1], got {self.score}")


def _wrap_angle(psi: float) -> float:
    """Wrap an angle in degrees into [-90, 90)."""
    psi = (psi + 90.0) % 180.0 - 90.0
    return psi


def canonicalize(cx: float, cy: float, w: float, h: float, psi: float) -> RotatedBox:
    """Return the canonical box: w >= h, psi in [-90, 90).

    If h > w the sides are swapped and psi is rotated by 90 degrees, which
    describes the same rectangle.  w == h keeps the incoming angle.
    """
    if w <= 0 or h <= 0:
        raise ValueError(f"box extents must be positive, got w={w}, h={h}")
    if h > w:
        w, h = h, w
        psi = psi + 90.0
    return RotatedBox(float(cx), float(cy), float(w), float(h), _wrap_angle(float(psi)))


def corners(box: RotatedBox) -> np.ndarray:
    """Corner coordinates, shape (4, 2), counter-clockwise.

    Order starts at the local (+w/2, +h/2) corner before rotation.
    """
    rad = math.radians(box.psi)
    c, s = math.cos(rad), math.sin(rad)
    local = np.array(
        [
            [+box.w / 2, +box.h / 2],
            [-box.w / 2, +box.h / 2],
            [-box.w / 2, -box.h / 2],
            [+box.w / 2, -box.h / 2],
        ]
    )
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([box.cx, box.cy])


def _clip_polygon(poly: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Clip a convex polygon by the half-plane left of the directed edge a->b."""
    if len(poly) == 0:
        return poly
    edge = b - a
    # signed distance: positive on the interior (left) side for CCW polygons
    d = (poly[:, 0] - a[0]) * edge[1] - (poly[:, 1] - a[1]) * edge[0]
    d = -d
    out = []
    n = len(poly)
    for i in range(n):
        j = (i + 1) % n
        if d[i] >= 0:
            out.append(poly[i])
            if d[j] < 0:
                t = d[i] / (d[i] - d[j])
                out.append(poly[i] + t * (poly[j] - poly[i]))
        elif d[j] >= 0:
            t = d[i] / (d[i] - d[j])
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out) if out else np.empty((0, 2))


def _polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def intersection_area(a: RotatedBox, b: RotatedBox) -> float:
    """Area of overlap, computed by clipping a's quad against b's half-planes."""
    poly = corners(a)
    cb = corners(b)
    for i in range(4):
        poly = _clip_polygon(poly, cb[i], cb[(i + 1) % 4])
        if len(poly) == 0:
            return 0.0
    return _polygon_area(poly)


def rotated_iou(a: RotatedBox, b: RotatedBox) -> float:
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union
