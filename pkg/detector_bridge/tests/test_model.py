"""Network geometry, target encoding, decoding, and suppression."""

import math

import numpy as np
import pytest
import torch

from detector_bridge.files import Box
from detector_bridge.model import (
    BASE_SIZE,
    N_OUT,
    STRIDE,
    BoxNet,
    cell_centers,
    decode_output,
    encode_targets,
    suppress,
)


class TestBoxNet:
    def test_output_shape(self):
        model = BoxNet(5)
        model.eval()
        with torch.no_grad():
            out = model(torch.zeros(1, 5, 64, 64))
        assert out.shape == (1, N_OUT, 64 // STRIDE, 64 // STRIDE)

    def test_objectness_starts_low(self):
        model = BoxNet(3)
        model.eval()
        with torch.no_grad():
            out = model(torch.zeros(2, 3, 32, 32))
        assert torch.sigmoid(out[:, 0]).max() < 0.1


class TestCellCenters:
    def test_metric_positions(self):
        ys, xs = cell_centers(16, 16, 0.5)
        # two stride-8 cells per axis over an 8 m x 8 m ego-centered grid
        np.testing.assert_allclose(ys, [-2.0, 2.0])
        np.testing.assert_allclose(xs, [-2.0, 2.0])

    def test_partial_last_cell(self):
        ys, xs = cell_centers(20, 20, 0.5)
        assert len(ys) == 3 and len(xs) == 3


class TestEncodeTargets:
    def test_single_box(self):
        box = Box(cx=2.0, cy=-2.0, w=4.2, h=1.8, psi=30.0)
        obj, reg = encode_targets([box], 80, 80, 0.2)
        assert obj.shape == (10, 10)
        assert obj.sum() == 1.0
        i, j = map(int, np.argwhere(obj > 0)[0])
        # cell indices from the metric center: (2.0 / 0.2 + 40) // 8
        assert (i, j) == (int((-2.0 / 0.2 + 40) // 8), int((2.0 / 0.2 + 40) // 8))
        assert reg[2, i, j] == pytest.approx(math.log(4.2 / BASE_SIZE))
        assert reg[3, i, j] == pytest.approx(math.log(1.8 / BASE_SIZE))
        assert reg[4, i, j] == pytest.approx(math.sin(math.radians(60.0)))
        assert reg[5, i, j] == pytest.approx(math.cos(math.radians(60.0)))

    def test_offsets_within_cell(self):
        obj, reg = encode_targets([Box(0.9, 0.9, 2.0, 1.0, 0.0)], 80, 80, 0.2)
        i, j = map(int, np.argwhere(obj > 0)[0])
        ys, xs = cell_centers(80, 80, 0.2)
        assert reg[0, i, j] == pytest.approx((0.9 - xs[j]) / (STRIDE * 0.2))
        assert reg[1, i, j] == pytest.approx((0.9 - ys[i]) / (STRIDE * 0.2))

    def test_duplicate_cell_dropped(self):
        boxes = [Box(0.1, 0.1, 2.0, 1.0, 0.0), Box(0.2, 0.2, 3.0, 1.0, 0.0)]
        obj, reg = encode_targets(boxes, 80, 80, 0.2)
        assert obj.sum() == 1.0
        i, j = map(int, np.argwhere(obj > 0)[0])
        assert reg[2, i, j] == pytest.approx(math.log(2.0 / BASE_SIZE))

    def test_out_of_bounds_dropped(self):
        obj, _ = encode_targets([Box(100.0, 0.0, 2.0, 1.0, 0.0)], 80, 80, 0.2)
        assert obj.sum() == 0.0


class TestDecodeOutput:
    def _perfect_output(self, boxes, rows, cols, resolution):
        """Head output that encodes the boxes exactly, logit 10 at positives."""
        obj, reg = encode_targets(boxes, rows, cols, resolution)
        out = np.zeros((N_OUT,) + obj.shape, dtype=np.float32)
        out[0] = np.where(obj > 0, 10.0, -10.0)
        out[1:] = reg
        return out

    def test_round_trip(self):
        boxes = [Box(2.3, -1.7, 4.2, 1.8, 35.0), Box(-6.0, 5.5, 2.6, 0.8, -50.0)]
        out = self._perfect_output(boxes, 100, 100, 0.2)
        decoded, scores = decode_output(out, 100, 100, 0.2, score_min=0.5)
        assert len(decoded) == 2
        assert all(s > 0.99 for s in scores)
        for want in boxes:
            got = min(decoded, key=lambda b: abs(b.cx - want.cx))
            assert got.cx == pytest.approx(want.cx, abs=1e-4)
            assert got.cy == pytest.approx(want.cy, abs=1e-4)
            assert got.w == pytest.approx(want.w, rel=1e-4)
            assert got.h == pytest.approx(want.h, rel=1e-4)
            assert got.psi == pytest.approx(want.psi, abs=1e-3)

    def test_canonical_form(self):
        # a box stated with the short side first decodes as long side first
        out = self._perfect_output([Box(0.0, 0.0, 1.0, 3.0, 10.0)], 100, 100, 0.2)
        decoded, _ = decode_output(out, 100, 100, 0.2, score_min=0.5)
        (box,) = decoded
        assert box.w == pytest.approx(3.0, rel=1e-4)
        assert box.h == pytest.approx(1.0, rel=1e-4)
        assert -90.0 <= box.psi < 90.0
        assert box.psi == pytest.approx(-80.0, abs=1e-3)

    def test_score_threshold(self):
        out = self._perfect_output([Box(0.0, 0.0, 2.0, 1.0, 0.0)], 100, 100, 0.2)
        assert decode_output(out, 100, 100, 0.2, score_min=0.99999)[0] == []

    def test_size_clipping(self):
        out = self._perfect_output([Box(0.0, 0.0, 2.0, 1.0, 0.0)], 100, 100, 0.2)
        out[3] = 50.0  # absurd log-width must not explode
        decoded, _ = decode_output(out, 100, 100, 0.2, score_min=0.5)
        assert decoded[0].w <= BASE_SIZE * math.exp(3) + 1e-6


class TestSuppress:
    def test_nearby_lower_score_removed(self):
        boxes = [Box(0.0, 0.0, 2, 1, 0), Box(1.0, 0.0, 2, 1, 0), Box(5.0, 0.0, 2, 1, 0)]
        kept, scores = suppress(boxes, [0.7, 0.9, 0.5], radius=2.0)
        assert scores == [0.9, 0.5]
        assert kept[0].cx == 1.0 and kept[1].cx == 5.0

    def test_far_apart_all_kept(self):
        boxes = [Box(0.0, 0.0, 2, 1, 0), Box(10.0, 0.0, 2, 1, 0)]
        kept, scores = suppress(boxes, [0.2, 0.8])
        assert len(kept) == 2
        assert scores == [0.8, 0.2]

    def test_empty(self):
        assert suppress([], []) == ([], [])
