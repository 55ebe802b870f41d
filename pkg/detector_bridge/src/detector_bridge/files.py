"""File interfaces shared with the grid toolkit.

The bridge talks to the grid pipeline exclusively through files: it reads
"EVTN" channel tensors and label text files, and writes prediction text
files. The formats are re-implemented here from their on-disk layout so
the bridge stays a separate package.

EVTN layout (little-endian): magic b"EVTN", version u16, cols u32,
rows u32, resolution f32, timestamp f64, planes u8, then `planes`
row-major float32 planes of rows*cols values. The ego sits at the lattice
midpoint, so cell (r, c) has center
    x = (c + 0.5 - cols / 2) * resolution
    y = (r + 0.5 - rows / 2) * resolution

Label lines: `frame_id cx cy w h psi`; prediction lines carry a trailing
score. '#' starts a comment.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<4sHIIfdB")
TENSOR_MAGIC = b"EVTN"
FORMAT_VERSION = 1


@dataclass
class Tensor:
    values: np.ndarray  # (channels, rows, cols) float32
    resolution: float
    timestamp: float

    @property
    def channels(self) -> int:
        return self.values.shape[0]


def load_tensor(path) -> Tensor:
    with open(path, "rb") as f:
        raw = f.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, cols, rows, resolution, timestamp, planes = _HEADER.unpack(raw)
        if magic != TENSOR_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        body = f.read()
    expected = planes * rows * cols
    if len(body) != 4 * expected:
        raise ValueError(f"{path}: expected {expected} values")
    values = np.frombuffer(body, dtype="<f4").reshape(planes, rows, cols)
    return Tensor(values=values, resolution=float(resolution), timestamp=float(timestamp))


@dataclass
class Box:
    cx: float
    cy: float
    w: float
    h: float
    psi: float  # degrees


def load_labels(path) -> list[Box]:
    boxes = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (6, 7):
            raise ValueError(f"{path}:{lineno}: expected 6 or 7 fields, got {len(parts)}")
        boxes.append(Box(*(float(v) for v in parts[1:6])))
    return boxes


def save_predictions(path, frame_id: int, boxes: list[Box], scores: list[float]):
    lines = []
    for b, s in zip(boxes, scores):
        lines.append(
            f"{frame_id} {b.cx:.4f} {b.cy:.4f} {b.w:.4f} {b.h:.4f} {b.psi:.4f} {s:.6f}"
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


@dataclass
class ScenarioFiles:
    """One scenario directory: tensors/, labels/, manifest.txt."""

    root: Path

    def frame_ids(self) -> list[int]:
        return sorted(int(p.stem) for p in (self.root / "tensors").glob("*.evtn"))

    def tensor_path(self, frame_id: int) -> Path:
        return self.root / "tensors" / f"{frame_id:06d}.evtn"

    def label_path(self, frame_id: int) -> Path:
        return self.root / "labels" / f"{frame_id:06d}.txt"

    def splits(self) -> dict[str, list[int]]:
        path = self.root / "manifest.txt"
        if not path.exists():
            raise FileNotFoundError(f"{self.root}: no manifest.txt (need train/val splits)")
        out = {}
        for line in path.read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            out[parts[0]] = [int(v) for v in parts[2:]]
        return out


def find_scenarios(dataset_dir) -> list[ScenarioFiles]:
    """Scenario directories under a dataset root (or the root itself)."""
    root = Path(dataset_dir)
    if (root / "tensors").is_dir():
        return [ScenarioFiles(root=root)]
    found = [ScenarioFiles(root=p) for p in sorted(root.iterdir()) if (p / "tensors").is_dir()]
    if not found:
        raise FileNotFoundError(f"{root}: no tensors/ directories found")
    return found
