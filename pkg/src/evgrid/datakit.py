"""Dataset generation and management.

Runs scripted scenes through the fusion pipeline, stores grid snapshots and
labels on disk, auto-labels frames with the classic clusterer under QA
rules, mines negative frames from mover-free scenes, subsamples, and builds
deterministic train/val/test split manifests.

Directory layout per scenario::

    <out>/<scenario>/frames/NNNNNN.evgr
    <out>/<scenario>/labels/NNNNNN.txt
    <out>/<scenario>/manifest.txt
    <out>/<scenario>/meta.txt

Label/prediction files are line-oriented UTF-8 text::

    frame_id x_center y_center w h psi_deg [score]

with the score column present only for predictions; '#' starts a comment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from . import cluster, gridio
from .fusion import FusionConfig, FusionPipeline
from .grid import DynamicGrid, GridGeometry, S as MASS_S
from .rotbox import Detection, RotatedBox, canonicalize, corners
from .scene import SceneScript, TimedPose, ground_truth, interpolate_pose, raycast, step_scene

MANUAL = "manual"
AUTO = "auto"
NEGATIVE = "negative"


@dataclass
class FrameRecord:
    frame_id: int
    timestamp: float
    grid_path: str
    boxes: list[RotatedBox] = field(default_factory=list)
    provenance: str = MANUAL

    def __post_init__(self):
        if self.provenance == NEGATIVE and self.boxes:
            raise ValueError("negative frames must not carry labels")


@dataclass
class SimParams:
    beam_count: int = 720
    max_range: float = 50.0
    noise_sigma: float = 0.02
    v_gt_min: float = 0.5


def _ego_delta(prev: TimedPose, cur: TimedPose) -> tuple[float, float, float]:
    """Ego motion between two poses, expressed in the previous ego frame."""
    rad = math.radians(prev.heading)
    c, s = math.cos(rad), math.sin(rad)
    dx, dy = cur.x - prev.x, cur.y - prev.y
    return (c * dx + s * dy, -s * dx + c * dy, cur.heading - prev.heading)


def simulate_scenario(
    script: SceneScript,
    seed: int = 0,
    fusion_config: FusionConfig | None = None,
    geometry: GridGeometry | None = None,
    sim: SimParams | None = None,
) -> Iterator[tuple[int, DynamicGrid, list[RotatedBox]]]:
    """Yield (frame_id, fused grid, ground-truth boxes) per tick."""
    sim = sim or SimParams()
    pipeline = FusionPipeline(geometry=geometry, config=fusion_config, seed=seed)
    scan_rng = np.random.default_rng(seed + 1)
    dt = 1.0 / script.tick_rate
    prev_ego = interpolate_pose(script.ego, 0.0)
    for frame_id, t in enumerate(script.frame_times):
        ego = interpolate_pose(script.ego, float(t))
        world = step_scene(script, float(t))
        scan = raycast(
            world,
            ego,
            beam_count=sim.beam_count,
            max_range=sim.max_range,
            noise_sigma=sim.noise_sigma,
            rng=scan_rng,
        )
        grid = pipeline.step(scan, dpose=_ego_delta(prev_ego, ego), dt=dt)
        prev_ego = ego
        yield frame_id, grid, ground_truth(world, ego, scan, sim.v_gt_min)


# ---------------------------------------------------------------------------
# label/prediction text files


def format_records(frame_id: int, items) -> str:
    lines = []
    for it in items:
        if isinstance(it, Detection):
            b, score = it.box, it.score
        else:
            b, score = it, None
        row = f"{frame_id} {b.cx:.4f} {b.cy:.4f} {b.w:.4f} {b.h:.4f} {b.psi:.4f}"
        if score is not None:
            row += f" {score:.6f}"
        lines.append(row)
    return "\n".join(lines) + ("\n" if lines else "")


def save_labels(path, frame_id: int, boxes: list[RotatedBox]):
    Path(path).write_text(format_records(frame_id, boxes))


def save_predictions(path, frame_id: int, detections: list[Detection]):
    Path(path).write_text(format_records(frame_id, detections))


def _parse(path, expect_score: bool):
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (6, 7):
            raise ValueError(f"{path}:{lineno}: expected 6 or 7 fields, got {len(parts)}")
        frame_id = int(parts[0])
        box = canonicalize(*(float(v) for v in parts[1:6]))
        if len(parts) == 7:
            out.append((frame_id, Detection(box=box, score=float(parts[6]))))
        elif expect_score:
            out.append((frame_id, Detection(box=box, score=1.0)))
        else:
            out.append((frame_id, box))
    return out


def load_labels(path) -> list[RotatedBox]:
    return [box for _fid, box in _parse(path, expect_score=False)]


def load_predictions(path) -> list[Detection]:
    return [det for _fid, det in _parse(path, expect_score=True)]


# ---------------------------------------------------------------------------
# dataset methodology


def subsample(frames: list, stride: int = 5) -> list:
    """Every stride-th frame, starting at the first."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    return frames[::stride]


@dataclass
class QaRules:
    max_box_area: float = 100.0  # m^2
    max_speed: float = 60.0  # m/s
    max_static_overlap: float = 0.5  # fraction of box cells that are S-dominant


def _static_overlap(grid: DynamicGrid, box: RotatedBox) -> float:
    """Fraction of box-covered cells whose dominant mass is static."""
    geom = grid.geometry
    pts = corners(box)
    r0, c0 = geom.point_to_cell(pts[:, 0].min(), pts[:, 1].min())
    r1, c1 = geom.point_to_cell(pts[:, 0].max(), pts[:, 1].max())
    r0, r1 = max(int(r0), 0), min(int(r1), geom.rows - 1)
    c0, c1 = max(int(c0), 0), min(int(c1), geom.cols - 1)
    if r1 < r0 or c1 < c0:
        return 0.0
    xs, ys = geom.cell_centers()
    xs = xs[r0 : r1 + 1, c0 : c1 + 1] - box.cx
    ys = ys[r0 : r1 + 1, c0 : c1 + 1] - box.cy
    rad = math.radians(box.psi)
    c, s = math.cos(rad), math.sin(rad)
    u = c * xs + s * ys
    v = -s * xs + c * ys
    inside = (np.abs(u) <= box.w / 2) & (np.abs(v) <= box.h / 2)
    if not inside.any():
        return 0.0
    sub = grid.masses[:, r0 : r1 + 1, c0 : c1 + 1][:, inside]
    dominant_static = np.argmax(sub, axis=0) == MASS_S
    return float(dominant_static.mean())


def autolabel_grid(
    grid: DynamicGrid,
    params: cluster.ClusterParams | None = None,
    qa: QaRules | None = None,
) -> tuple[list[RotatedBox], bool]:
    """Classic-clustering labels for one grid plus a QA verdict.

    Returns (labels, ok).  ok is False when any label breaks a sanity rule;
    such frames are dropped from auto-labeled datasets, standing in for the
    manual post-processing step of a human annotator.
    """
    params = params or cluster.ClusterParams()
    qa = qa or QaRules()
    cells = cluster.extract_dynamic_cells(grid, params.m_D_min)
    inflate = grid.geometry.resolution / 2.0
    labels = []
    for idx in cluster.dbscan(cells, params):
        box = cluster.fit_box(cells, idx, inflate=inflate)
        speed = float(np.linalg.norm(cells.velocities[idx].mean(axis=0)))
        if box.area > qa.max_box_area:
            return [], False
        if speed > qa.max_speed:
            return [], False
        if _static_overlap(grid, box) > qa.max_static_overlap:
            return [], False
        labels.append(box)
    return labels, True


def autolabel(
    records: list[FrameRecord],
    params: cluster.ClusterParams | None = None,
    qa: QaRules | None = None,
) -> list[FrameRecord]:
    """Auto-label frames from their stored grids; drop QA failures.

    Frames that end up with no labels are dropped unless tagged negative.
    """
    out = []
    for rec in records:
        grid = gridio.load_grid(rec.grid_path)
        labels, ok = autolabel_grid(grid, params, qa)
        if not ok:
            continue
        if not labels and rec.provenance != NEGATIVE:
            continue
        if rec.provenance == NEGATIVE:
            labels = []
        out.append(
            FrameRecord(
                frame_id=rec.frame_id,
                timestamp=rec.timestamp,
                grid_path=rec.grid_path,
                boxes=labels,
                provenance=rec.provenance if rec.provenance == NEGATIVE else AUTO,
            )
        )
    return out


def mine_negatives(records: list[FrameRecord], script: SceneScript) -> list[FrameRecord]:
    """Tag all frames of a mover-free scene as negatives (empty labels)."""
    if any(e.kind == "mover" for e in script.entities):
        return []
    return [
        FrameRecord(
            frame_id=r.frame_id,
            timestamp=r.timestamp,
            grid_path=r.grid_path,
            boxes=[],
            provenance=NEGATIVE,
        )
        for r in records
    ]


@dataclass
class SplitManifest:
    splits: dict[str, list[int]]

    def counts(self) -> dict[str, int]:
        return {k: len(v) for k, v in self.splits.items()}

    def check(self):
        seen = set()
        for ids in self.splits.values():
            for i in ids:
                if i in seen:
                    raise ValueError(f"frame {i} appears in more than one split")
                seen.add(i)


def make_splits(
    frames: list[FrameRecord],
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> SplitManifest:
    """Deterministic shuffled train/val/test split."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("split ratios must sum to 1")
    ids = [f.frame_id for f in frames]
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    n_train = int(round(ratios[0] * len(ids)))
    n_val = int(round(ratios[1] * len(ids)))
    shuffled = [ids[i] for i in order]
    manifest = SplitManifest(
        splits={
            "train": sorted(shuffled[:n_train]),
            "val": sorted(shuffled[n_train : n_train + n_val]),
            "test": sorted(shuffled[n_train + n_val :]),
        }
    )
    manifest.check()
    return manifest


def save_manifest(path, manifest: SplitManifest):
    lines = ["# split manifest"]
    for name, ids in manifest.splits.items():
        lines.append(f"{name} {len(ids)} " + " ".join(str(i) for i in ids))
    Path(path).write_text("\n".join(lines) + "\n")


def load_manifest(path) -> SplitManifest:
    splits = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        name, count, ids = parts[0], int(parts[1]), [int(v) for v in parts[2:]]
        if count != len(ids):
            raise ValueError(f"manifest split {name}: declared {count}, found {len(ids)}")
        splits[name] = ids
    manifest = SplitManifest(splits=splits)
    manifest.check()
    return manifest


# ---------------------------------------------------------------------------
# on-disk scenario datasets


@dataclass
class ScenarioDataset:
    root: Path

    @property
    def frames_dir(self) -> Path:
        return self.root / "frames"

    @property
    def labels_dir(self) -> Path:
        return self.root / "labels"

    @property
    def predictions_dir(self) -> Path:
        return self.root / "predictions"

    def frame_ids(self) -> list[int]:
        return sorted(int(p.stem) for p in self.frames_dir.glob("*.evgr"))

    def grid_path(self, frame_id: int) -> Path:
        return self.frames_dir / f"{frame_id:06d}.evgr"

    def label_path(self, frame_id: int) -> Path:
        return self.labels_dir / f"{frame_id:06d}.txt"

    def prediction_path(self, frame_id: int) -> Path:
        return self.predictions_dir / f"{frame_id:06d}.txt"

    def load_records(self) -> list[FrameRecord]:
        has_movers = True
        meta = self.root / "meta.txt"
        if meta.exists():
            for line in meta.read_text().splitlines():
                if line.startswith("has_movers="):
                    has_movers = line.split("=", 1)[1].strip() == "1"
        records = []
        for fid in self.frame_ids():
            boxes = load_labels(self.label_path(fid)) if self.label_path(fid).exists() else []
            records.append(
                FrameRecord(
                    frame_id=fid,
                    timestamp=0.0,
                    grid_path=str(self.grid_path(fid)),
                    boxes=boxes,
                    provenance=MANUAL if has_movers else NEGATIVE,
                )
            )
        return records


def write_dataset(
    out_dir,
    script: SceneScript,
    seed: int = 0,
    fusion_config: FusionConfig | None = None,
    geometry: GridGeometry | None = None,
    sim: SimParams | None = None,
) -> ScenarioDataset:
    """Simulate a scenario and persist frames, labels, meta, and manifest."""
    root = Path(out_dir) / script.name
    ds = ScenarioDataset(root=root)
    ds.frames_dir.mkdir(parents=True, exist_ok=True)
    ds.labels_dir.mkdir(parents=True, exist_ok=True)
    has_movers = any(e.kind == "mover" for e in script.entities)
    records = []
    for frame_id, grid, boxes in simulate_scenario(script, seed, fusion_config, geometry, sim):
        gridio.save_grid(ds.grid_path(frame_id), grid)
        save_labels(ds.label_path(frame_id), frame_id, boxes)
        records.append(
            FrameRecord(
                frame_id=frame_id,
                timestamp=grid.timestamp,
                grid_path=str(ds.grid_path(frame_id)),
                boxes=boxes,
                provenance=MANUAL if has_movers else NEGATIVE,
            )
        )
    (root / "meta.txt").write_text(
        f"scenario={script.name}\nseed={seed}\nhas_movers={int(has_movers)}\n"
        f"frames={len(records)}\n"
    )
    save_manifest(root / "manifest.txt", make_splits(records, seed=seed))
    return ds
