"""Learned rotated-box detector over exported occupancy-grid tensors.

Separate from the grid toolkit: consumes its "EVTN" tensor files and label
text files, produces prediction text files the toolkit's eval command
ingests directly.
"""

from .files import Box, ScenarioFiles, find_scenarios, load_labels, load_tensor
from .infer import infer, infer_scenario, load_model
from .model import BoxNet
from .train import TrainSpec, train

__version__ = "0.1.0"

__all__ = [
    "Box",
    "BoxNet",
    "ScenarioFiles",
    "TrainSpec",
    "find_scenarios",
    "infer",
    "infer_scenario",
    "load_labels",
    "load_model",
    "load_tensor",
    "train",
]
