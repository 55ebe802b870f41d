"""Detection evaluation: matching, precision/recall curves, operating points.

Single-class rotated-box evaluation with greedy score-ordered matching at an
IoU threshold.  The average precision integrates the precision envelope
(all-points interpolation) by default; 11-point interpolation is available
as an alternative convention.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .rotbox import Detection, RotatedBox, rotated_iou


@dataclass
class MatchResult:
    tp: np.ndarray  # bool per prediction, ordered by descending score
    scores: np.ndarray  # matching order of tp
    fn: int
    iou_threshold: float


@dataclass
class PrCurve:
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    ap: float


def match_frame(
    preds: list[Detection], gts: list[RotatedBox], iou_threshold: float = 0.5
) -> MatchResult:
    """Greedy matching in descending score order.

    Each prediction takes the unmatched ground-truth box of highest IoU if
    that IoU reaches the threshold, else it is a false positive.  Equal
    scores keep input order.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError("iou_threshold must be in (0,1)")
    order = sorted(range(len(preds)), key=lambda i: -preds[i].score)
    taken = [False] * len(gts)
    tp = np.zeros(len(preds), dtype=bool)
    scores = np.array([preds[i].score for i in order])
    for rank, i in enumerate(order):
        best_iou, best_j = 0.0, -1
        for j, gt in enumerate(gts):
            if taken[j]:
                continue
            iou = rotated_iou(preds[i].box, gt)
            if iou > best_iou:
                best_iou, best_j = iou, j
        if best_j >= 0 and best_iou >= iou_threshold:
            taken[best_j] = True
            tp[rank] = True
    return MatchResult(tp=tp, scores=scores, fn=taken.count(False), iou_threshold=iou_threshold)


def _envelope(recall: np.ndarray, precision: np.ndarray) -> np.ndarray:
    """Precision at each recall replaced by the max precision at recall >= r."""
    return np.maximum.accumulate(precision[::-1])[::-1]


def pr_curve(
    frames: list[tuple[list[Detection], list[RotatedBox]]],
    iou_threshold: float = 0.5,
    ap_mode: str = "all-points",
) -> PrCurve:
    """Pooled precision/recall over a dataset of (predictions, ground truth).

    Sweeps the score threshold over every distinct score.  Raises when the
    dataset has no ground truth at all (recall undefined).
    """
    if ap_mode not in ("all-points", "11-point"):
        raise ValueError(f"unknown ap_mode {ap_mode!r}")
    n_gt = sum(len(gts) for _, gts in frames)
    if n_gt == 0:
        raise ValueError("dataset has no ground-truth boxes; recall undefined")
    scores, tps = [], []
    for preds, gts in frames:
        m = match_frame(preds, gts, iou_threshold)
        scores.append(m.scores)
        tps.append(m.tp)
    scores = np.concatenate(scores) if scores else np.empty(0)
    tps = np.concatenate(tps) if tps else np.empty(0, dtype=bool)

    order = np.argsort(-scores, kind="stable")
    scores, tps = scores[order], tps[order]
    distinct = np.ones(len(scores), dtype=bool)
    distinct[:-1] = scores[:-1] != scores[1:]  # last entry of each score bucket
    cum_tp = np.cumsum(tps)
    cum_fp = np.cumsum(~tps)
    thresholds = scores[distinct]
    tp_at = cum_tp[distinct]
    fp_at = cum_fp[distinct]
    precision = tp_at / np.maximum(tp_at + fp_at, 1)
    recall = tp_at / n_gt

    if len(recall) == 0:
        ap = 0.0
    elif ap_mode == "all-points":
        env = _envelope(recall, precision)
        r_prev = np.concatenate([[0.0], recall[:-1]])
        ap = float(np.sum((recall - r_prev) * env))
    else:
        env = _envelope(recall, precision)
        ap = 0.0
        for r in np.linspace(0, 1, 11):
            mask = recall >= r - 1e-12
            ap += float(env[mask][0]) if mask.any() else 0.0
        ap /= 11.0
    return PrCurve(thresholds=thresholds, precision=precision, recall=recall, ap=float(ap))


def operating_point(curve: PrCurve, target_recall: float) -> tuple[float, float]:
    """Score threshold and interpolated precision where recall reaches target.

    Picks the highest threshold whose recall is at least the target (the
    point where the curve first reaches that recall) and reports the
    precision envelope there.  Raises when the target recall is unreachable.
    """
    reach = curve.recall >= target_recall - 1e-12
    if not reach.any():
        max_r = float(curve.recall.max()) if len(curve.recall) else 0.0
        raise ValueError(f"target recall {target_recall} unreachable (max {max_r:.4f})")
    env = _envelope(curve.recall, curve.precision)
    i = int(np.argmax(reach))  # thresholds are descending: first True = highest
    return float(curve.thresholds[i]), float(env[i])


@dataclass
class ComparisonReport:
    curve: PrCurve
    classic_precision: float
    classic_recall: float
    curve_precision_at_classic_recall: float | None
    precision_delta: float | None  # curve minus classic; None when unreachable


def compare_to_classic(
    curve: PrCurve, classic_point: tuple[float, float]
) -> ComparisonReport:
    """Compare a score-swept curve against the single classic operating point.

    Only orderings on the data at hand are meaningful; absolute values are
    data-dependent.
    """
    classic_precision, classic_recall = classic_point
    try:
        _thr, p = operating_point(curve, classic_recall)
        delta = p - classic_precision
    except ValueError:
        p, delta = None, None
    return ComparisonReport(
        curve=curve,
        classic_precision=classic_precision,
        classic_recall=classic_recall,
        curve_precision_at_classic_recall=p,
        precision_delta=delta,
    )


def write_pr_csv(path, curve: PrCurve):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["threshold", "precision", "recall"])
        for t, p, r in zip(curve.thresholds, curve.precision, curve.recall):
            writer.writerow([f"{t:.6f}", f"{p:.6f}", f"{r:.6f}"])


def plot_pr_curve(path, curve: PrCurve, classic_point: tuple[float, float] | None = None):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(curve.recall, curve.precision, "-", color="tab:blue", label="detector")
    if classic_point is not None:
        ax.plot(classic_point[1], classic_point[0], "o", color="red", label="classic clustering")
    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.05)
    ax.grid(True, alpha=0.4)
    ax.legend(loc="lower left")
    ax.set_title(f"AP = {curve.ap:.3f}")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
