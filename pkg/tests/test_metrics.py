import numpy as np
import pytest

from evgrid.metrics import (
    compare_to_classic,
    match_frame,
    operating_point,
    plot_pr_curve,
    pr_curve,
    write_pr_csv,
)
from evgrid.rotbox import Detection, RotatedBox


def _sq(x, y=0.0):
    return RotatedBox(x, y, 1.0, 1.0, 0.0)


def _det(x, score, y=0.0):
    return Detection(box=_sq(x, y), score=score)


def reference_frame():
    """Three ground-truth boxes, four predictions: TP .9, FP .8, TP .7, TP .6."""
    gts = [_sq(0), _sq(10), _sq(20)]
    preds = [_det(0, 0.9), _det(40, 0.8), _det(10, 0.7), _det(20, 0.6)]
    return preds, gts


class TestMatchFrame:
    def test_double_detection_of_one_gt(self):
        preds = [_det(0, 0.9), _det(0.2, 0.8)]
        m = match_frame(preds, [_sq(0)])
        assert m.tp.tolist() == [True, False]
        assert m.fn == 0

    def test_prediction_takes_best_iou_gt(self):
        pred = Detection(box=RotatedBox(0.3, 0, 1, 1, 0), score=1.0)
        m = match_frame([pred], [_sq(0), _sq(0.4)])
        assert m.tp.tolist() == [True]
        # the nearer gt was taken, the farther one is the miss
        assert m.fn == 1
        second = match_frame([pred, _det(0.1, 0.5)], [_sq(0), _sq(0.4)])
        assert second.tp.tolist() == [True, True]

    def test_iou_exactly_at_threshold_counts(self):
        # half-overlapping unit squares: IoU = 1/3
        m = match_frame([_det(0.5, 1.0)], [_sq(0)], iou_threshold=1 / 3)
        assert m.tp.tolist() == [True]

    def test_no_predictions(self):
        m = match_frame([], [_sq(0), _sq(5)])
        assert len(m.tp) == 0
        assert m.fn == 2

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            match_frame([], [], iou_threshold=0.0)


class TestPrCurve:
    def test_reference_table(self):
        curve = pr_curve([reference_frame()])
        assert curve.thresholds.tolist() == [0.9, 0.8, 0.7, 0.6]
        assert np.allclose(curve.precision, [1.0, 0.5, 2 / 3, 0.75])
        assert np.allclose(curve.recall, [1 / 3, 1 / 3, 2 / 3, 1.0])
        assert curve.ap == pytest.approx(0.8333, abs=1e-4)
        assert curve.ap == pytest.approx(1 / 3 + 2 / 3 * 0.75, abs=1e-6)

    def test_reference_table_eleven_point(self):
        curve = pr_curve([reference_frame()], ap_mode="11-point")
        assert curve.ap == pytest.approx((4 * 1.0 + 7 * 0.75) / 11, abs=1e-6)

    def test_perfect_detector(self):
        gts = [_sq(0), _sq(10)]
        preds = [_det(0, 0.9), _det(10, 0.4)]
        curve = pr_curve([(preds, gts)])
        assert curve.ap == pytest.approx(1.0)

    def test_all_false_positives(self):
        curve = pr_curve([([_det(40, 0.9)], [_sq(0)])])
        assert curve.ap == 0.0

    def test_score_bucket_pooling(self):
        # two predictions sharing a score collapse into one threshold entry
        preds = [_det(0, 0.5), _det(40, 0.5)]
        curve = pr_curve([(preds, [_sq(0)])])
        assert curve.thresholds.tolist() == [0.5]
        assert curve.precision.tolist() == [0.5]

    def test_pools_across_frames(self):
        frames = [([_det(0, 0.9)], [_sq(0)]), ([_det(40, 0.8)], [_sq(0)])]
        curve = pr_curve(frames)
        assert np.allclose(curve.recall, [0.5, 0.5])
        assert np.allclose(curve.precision, [1.0, 0.5])

    def test_zero_gt_rejected(self):
        with pytest.raises(ValueError, match="ground truth|ground-truth"):
            pr_curve([([_det(0, 0.9)], [])])

    def test_bad_ap_mode(self):
        with pytest.raises(ValueError):
            pr_curve([reference_frame()], ap_mode="37-point")

    def test_envelope_monotone_on_random_datasets(self, rng):
        for _ in range(100):
            frames = []
            for _ in range(int(rng.integers(1, 4))):
                gts = [_sq(10.0 * i) for i in range(int(rng.integers(1, 6)))]
                preds = []
                for i, gt in enumerate(gts):
                    if rng.random() < 0.7:
                        preds.append(_det(gt.cx, float(rng.random())))
                for _ in range(int(rng.integers(0, 5))):
                    preds.append(_det(-20.0 - 10 * rng.random(), float(rng.random())))
                frames.append((preds, gts))
            if not any(p for p, _ in frames):
                continue
            curve = pr_curve(frames)
            assert (np.diff(curve.recall) >= -1e-12).all()
            env = np.maximum.accumulate(curve.precision[::-1])[::-1]
            assert (np.diff(env) <= 1e-12).all()
            assert 0.0 <= curve.ap <= 1.0


class TestOperatingPoint:
    def test_reference_operating_point(self):
        curve = pr_curve([reference_frame()])
        thr, prec = operating_point(curve, 2 / 3)
        assert thr == pytest.approx(0.7)
        assert prec == pytest.approx(0.75)

    def test_unreachable_recall(self):
        curve = pr_curve([([_det(40, 0.9)], [_sq(0)])])
        with pytest.raises(ValueError, match="unreachable"):
            operating_point(curve, 0.5)


class TestCompareToClassic:
    def test_curve_beats_classic(self):
        curve = pr_curve([reference_frame()])
        report = compare_to_classic(curve, (0.6, 2 / 3))
        assert report.curve_precision_at_classic_recall == pytest.approx(0.75)
        assert report.precision_delta == pytest.approx(0.15)

    def test_unreachable_classic_recall(self):
        curve = pr_curve([([_det(0, 0.9)], [_sq(0), _sq(10)])])
        report = compare_to_classic(curve, (1.0, 1.0))
        assert report.curve_precision_at_classic_recall is None
        assert report.precision_delta is None


class TestOutputs:
    def test_csv_format(self, tmp_path):
        curve = pr_curve([reference_frame()])
        path = tmp_path / "pr.csv"
        write_pr_csv(path, curve)
        lines = path.read_text().splitlines()
        assert lines[0] == "threshold,precision,recall"
        assert lines[1] == "0.900000,1.000000,0.333333"
        assert len(lines) == 5

    def test_plot_writes_file(self, tmp_path):
        curve = pr_curve([reference_frame()])
        path = tmp_path / "pr.png"
        plot_pr_curve(path, curve, classic_point=(0.6, 2 / 3))
        assert path.stat().st_size > 0
