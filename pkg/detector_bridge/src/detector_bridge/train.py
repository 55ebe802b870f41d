"""Training loop for the bridge detector."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .files import find_scenarios, load_labels
from .model import BoxNet, encode_targets

logger = logging.getLogger(__name__)


@dataclass
class TrainSpec:
    dataset_dir: str
    epochs: int = 20
    batch_size: int = 4
    lr: float = 1e-3
    lr_decay_epoch: int = 14  # learning rate drops x0.1 here
    mode: int = 5  # tensor channels, 3 or 5
    seed: int = 0
    pos_weight: float = 200.0  # a frame has a handful of positives among thousands of cells

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.mode not in (3, 5):
            raise ValueError("mode must be 3 or 5")


def _collect_frames(spec: TrainSpec, split: str):
    """(tensor path, label path) pairs for one split across all scenarios."""
    frames = []
    for sc in find_scenarios(spec.dataset_dir):
        if not (sc.root / "labels").is_dir():
            raise FileNotFoundError(f"{sc.root}: no labels/ directory")
        ids = sc.splits().get(split, [])
        for fid in ids:
            tpath = sc.tensor_path(fid)
            if tpath.exists():
                frames.append((tpath, sc.label_path(fid)))
    return frames


def _load_frame(tpath, lpath, mode):
    from .files import load_tensor

    tensor = load_tensor(tpath)
    if tensor.channels != mode:
        raise ValueError(f"{tpath}: {tensor.channels}-channel tensor, model wants {mode}")
    boxes = load_labels(lpath) if Path(lpath).exists() else []
    _, rows, cols = tensor.values.shape
    obj, reg = encode_targets(boxes, rows, cols, tensor.resolution)
    return tensor.values.astype(np.float32), obj, reg


def _epoch_pass(model, frames, spec, optimizer, rng, train: bool):
    model.train(train)
    order = rng.permutation(len(frames)) if train else np.arange(len(frames))
    pos_weight = torch.tensor(spec.pos_weight)
    total = 0.0
    nb = 0
    for start in range(0, len(order), spec.batch_size):
        batch = [frames[k] for k in order[start : start + spec.batch_size]]
        x = torch.from_numpy(np.stack([b[0] for b in batch]))
        obj = torch.from_numpy(np.stack([b[1] for b in batch]))
        reg = torch.from_numpy(np.stack([b[2] for b in batch]))
        with torch.set_grad_enabled(train):
            out = model(x)
            loss_obj = F.binary_cross_entropy_with_logits(
                out[:, 0], obj, pos_weight=pos_weight
            )
            mask = obj > 0
            if mask.any():
                pred_reg = out[:, 1:].permute(0, 2, 3, 1)[mask]
                true_reg = reg.permute(0, 2, 3, 1)[mask]
                loss_reg = F.smooth_l1_loss(pred_reg, true_reg)
            else:
                loss_reg = torch.zeros(())
            loss = loss_obj + loss_reg
        if train:
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        total += float(loss.detach())
        nb += 1
    return total / max(nb, 1)


def train(spec: TrainSpec, out_path) -> dict:
    """Train on the manifest train split; returns per-epoch loss history.

    The saved artifact bundles the weights with the input mode so inference
    can reject mismatched tensors.
    """
    torch.manual_seed(spec.seed)
    rng = np.random.default_rng(spec.seed)

    train_specs = _collect_frames(spec, "train")
    val_specs = _collect_frames(spec, "val")
    if not train_specs:
        raise FileNotFoundError(f"{spec.dataset_dir}: no training frames in manifests")
    train_frames = [_load_frame(t, l, spec.mode) for t, l in train_specs]
    val_frames = [_load_frame(t, l, spec.mode) for t, l in val_specs]

    model = BoxNet(spec.mode)
    optimizer = torch.optim.Adam(model.parameters(), lr=spec.lr)
    scheduler = torch.optim.lr_scheduler.StepLR(
        optimizer, step_size=spec.lr_decay_epoch, gamma=0.1
    )

    history = {"train_loss": [], "val_loss": []}
    for epoch in range(spec.epochs):
        loss = _epoch_pass(model, train_frames, spec, optimizer, rng, train=True)
        scheduler.step()
        history["train_loss"].append(loss)
        if val_frames:
            history["val_loss"].append(
                _epoch_pass(model, val_frames, spec, optimizer, rng, train=False)
            )
        logger.info("epoch %d: train loss %.4f", epoch + 1, loss)

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {"state_dict": model.state_dict(), "mode": spec.mode, "history": history},
        out_path,
    )
    return history
