"""Inference: tensors in, prediction text files out."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .files import find_scenarios, load_tensor, save_predictions
from .model import BoxNet, decode_output, suppress


def load_model(path) -> tuple[BoxNet, int]:
    artifact = torch.load(path, map_location="cpu", weights_only=True)
    mode = int(artifact["mode"])
    model = BoxNet(mode)
    model.load_state_dict(artifact["state_dict"])
    model.eval()
    return model, mode


def infer_scenario(model: BoxNet, mode: int, scenario, out_dir, score_min: float = 0.05):
    """One prediction file per frame of a scenario directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for fid in scenario.frame_ids():
        tensor = load_tensor(scenario.tensor_path(fid))
        if tensor.channels != mode:
            raise ValueError(
                f"{scenario.tensor_path(fid)}: {tensor.channels}-channel tensor, "
                f"model trained on {mode}"
            )
        _, rows, cols = tensor.values.shape
        x = torch.from_numpy(tensor.values.astype(np.float32)).unsqueeze(0)
        with torch.no_grad():
            out = model(x)[0].numpy()
        boxes, scores = decode_output(out, rows, cols, tensor.resolution, score_min)
        boxes, scores = suppress(boxes, scores)
        path = out_dir / f"{fid:06d}.txt"
        save_predictions(path, fid, boxes, scores)
        written.append(path)
    return written


def infer(model_path, dataset_dir, out_dir=None, score_min: float = 0.05):
    """Predictions for every scenario under a dataset root.

    Output defaults to `<scenario>/predictions_bridge/` next to the tensors.
    """
    model, mode = load_model(model_path)
    written = []
    for sc in find_scenarios(dataset_dir):
        target = Path(out_dir) / sc.root.name if out_dir else sc.root / "predictions_bridge"
        written += infer_scenario(model, mode, sc, target, score_min)
    return written
