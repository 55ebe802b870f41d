"""Dense single-shot rotated-box detector.

A small convolutional backbone downsamples the grid tensor by a factor of
8; each feature cell predicts an objectness logit and a rotated box
relative to its own center: offsets in stride units, log-size relative to
a 4 m base, and the doubled box angle as a (sin, cos) pair (the angle of a
rectangle is 180-degree periodic).
"""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn as nn

STRIDE = 8
BASE_SIZE = 4.0  # m, log-size reference
N_OUT = 7  # objectness, tx, ty, log w, log h, sin 2psi, cos 2psi


class BoxNet(nn.Module):
    def __init__(self, in_channels: int):
        super().__init__()
        self.in_channels = in_channels

        def block(cin, cout):
            return [
                nn.Conv2d(cin, cout, 3, stride=2, padding=1),
                nn.BatchNorm2d(cout),
                nn.ReLU(inplace=True),
                nn.Conv2d(cout, cout, 3, padding=1),
                nn.BatchNorm2d(cout),
                nn.ReLU(inplace=True),
            ]

        self.backbone = nn.Sequential(
            *block(in_channels, 16), *block(16, 32), *block(32, 48)
        )
        self.head = nn.Conv2d(48, N_OUT, 1)
        # start with low objectness so the sparse positives dominate early
        nn.init.constant_(self.head.bias[:1], -4.0)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.backbone(x))


def cell_centers(rows: int, cols: int, resolution: float):
    """Ego-frame metric centers of the stride-8 feature cells."""
    fr = (rows + STRIDE - 1) // STRIDE
    fc = (cols + STRIDE - 1) // STRIDE
    ys = ((np.arange(fr) + 0.5) * STRIDE - rows / 2) * resolution
    xs = ((np.arange(fc) + 0.5) * STRIDE - cols / 2) * resolution
    return ys, xs


def encode_targets(boxes, rows: int, cols: int, resolution: float):
    """Objectness and regression maps for one frame.

    Each box is assigned to the feature cell containing its center; later
    boxes landing in an occupied cell are dropped.
    """
    ys, xs = cell_centers(rows, cols, resolution)
    fr, fc = len(ys), len(xs)
    obj = np.zeros((fr, fc), dtype=np.float32)
    reg = np.zeros((6, fr, fc), dtype=np.float32)
    cell_m = STRIDE * resolution
    for b in boxes:
        i = int((b.cy / resolution + rows / 2) // STRIDE)
        j = int((b.cx / resolution + cols / 2) // STRIDE)
        if not (0 <= i < fr and 0 <= j < fc) or obj[i, j] > 0:
            continue
        obj[i, j] = 1.0
        rad2 = 2.0 * math.radians(b.psi)
        reg[:, i, j] = (
            (b.cx - xs[j]) / cell_m,
            (b.cy - ys[i]) / cell_m,
            math.log(max(b.w, 0.1) / BASE_SIZE),
            math.log(max(b.h, 0.1) / BASE_SIZE),
            math.sin(rad2),
            math.cos(rad2),
        )
    return obj, reg


def decode_output(out: np.ndarray, rows: int, cols: int, resolution: float, score_min: float):
    """Boxes and scores from one frame's raw head output (N_OUT, fr, fc)."""
    from .files import Box

    ys, xs = cell_centers(rows, cols, resolution)
    scores_map = 1.0 / (1.0 + np.exp(-out[0]))
    cell_m = STRIDE * resolution
    boxes, scores = [], []
    for i, j in np.argwhere(scores_map >= score_min):
        tx, ty, lw, lh, s2, c2 = out[1:, i, j]
        psi = math.degrees(0.5 * math.atan2(float(s2), float(c2)))
        w = BASE_SIZE * math.exp(float(np.clip(lw, -3, 3)))
        h = BASE_SIZE * math.exp(float(np.clip(lh, -3, 3)))
        if h > w:  # canonical form: long side first, angle in [-90, 90)
            w, h = h, w
            psi += 90.0
        psi = (psi + 90.0) % 180.0 - 90.0
        boxes.append(
            Box(
                cx=float(xs[j] + tx * cell_m),
                cy=float(ys[i] + ty * cell_m),
                w=w,
                h=h,
                psi=psi,
            )
        )
        scores.append(float(scores_map[i, j]))
    return boxes, scores


def suppress(boxes, scores, radius: float = 2.0):
    """Greedy center-distance suppression, highest score first."""
    order = np.argsort(-np.asarray(scores)) if scores else []
    keep_boxes, keep_scores = [], []
    for k in order:
        b = boxes[k]
        if any(math.hypot(b.cx - o.cx, b.cy - o.cy) < radius for o in keep_boxes):
            continue
        keep_boxes.append(b)
        keep_scores.append(scores[k])
    return keep_boxes, keep_scores
