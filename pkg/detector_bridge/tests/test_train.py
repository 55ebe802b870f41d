"""Training loop behavior on the simulated corpus."""

import shutil

import pytest
import torch

from detector_bridge import TrainSpec, load_model, train


class TestTrainSpec:
    def test_defaults(self):
        spec = TrainSpec(dataset_dir="x")
        assert spec.epochs == 20
        assert spec.mode == 5

    @pytest.mark.parametrize(
        "kwargs, match",
        [
            ({"epochs": 0}, "epochs"),
            ({"batch_size": 0}, "batch_size"),
            ({"mode": 4}, "mode"),
        ],
    )
    def test_validation(self, kwargs, match):
        with pytest.raises(ValueError, match=match):
            TrainSpec(dataset_dir="x", **kwargs)


class TestTrain:
    def test_single_epoch_artifact(self, quick_model):
        artifact = torch.load(quick_model, map_location="cpu", weights_only=True)
        assert artifact["mode"] == 5
        assert len(artifact["history"]["train_loss"]) == 1
        assert len(artifact["history"]["val_loss"]) == 1
        model, mode = load_model(quick_model)
        assert mode == 5
        assert not model.training

    def test_loss_decreases(self, full_model):
        _, history, _ = full_model
        losses = history["train_loss"]
        assert losses[-1] < losses[0]
        assert losses[-1] < 0.05

    def test_no_training_frames(self, tmp_path, train_corpus):
        # keep tensors and labels but empty the train/val splits
        scenario = tmp_path / "movers"
        shutil.copytree(train_corpus / "movers", scenario)
        (scenario / "manifest.txt").write_text("train 0\nval 0\n")
        with pytest.raises(FileNotFoundError, match="no training frames"):
            train(TrainSpec(dataset_dir=str(tmp_path), epochs=1), tmp_path / "m.pt")

    def test_missing_labels_dir(self, tmp_path, train_corpus):
        scenario = tmp_path / "movers"
        shutil.copytree(train_corpus / "movers", scenario)
        shutil.rmtree(scenario / "labels")
        with pytest.raises(FileNotFoundError, match="labels"):
            train(TrainSpec(dataset_dir=str(tmp_path), epochs=1), tmp_path / "m.pt")

    def test_channel_count_mismatch(self, tmp_path, train_corpus):
        scenario = tmp_path / "movers"
        shutil.copytree(train_corpus / "movers", scenario)
        with pytest.raises(ValueError, match="wants 3"):
            train(TrainSpec(dataset_dir=str(tmp_path), epochs=1, mode=3), tmp_path / "m.pt")
