"""Shared fixtures: simulated corpora built through the grid toolkit CLI.

The bridge only ever talks to the grid pipeline through its command line
and file formats, so the test corpus is generated the same way: `evgrid
simulate` + `detect-classic` + `encode` over a small set of scene scripts.
One scene has thin movers (their full extent is visible to a surface
sensor, so classic boxes can reach useful IoU); the other three are the
mover-free clutter scenes that provoke classic ghost detections.
"""

import shutil
import subprocess
import time

import pytest

SCENES = {
    "movers": """\
name: movers
duration: 3.0
tick_rate: 10.0
ego:
- {t: 0, x: 0, y: 0, heading: 0}
entities:
- kind: mover
  footprint: {cx: 0.0, cy: 0.0, w: 3.0, h: 0.3, psi: 0.0}
  trajectory:
  - {t: 0, x: -4.5, y: 8, heading: 0}
  - {t: 3, x: 4.5, y: 8, heading: 0}
- kind: mover
  footprint: {cx: 0.0, cy: 0.0, w: 3.0, h: 0.3, psi: 0.0}
  trajectory:
  - {t: 0, x: 4.5, y: -6, heading: 180}
  - {t: 3, x: -4.5, y: -6, heading: 180}
""",
    "boundary": """\
name: boundary
duration: 3.0
tick_rate: 10.0
ego:
- {t: 0, x: 0, y: 0, heading: 0}
entities:
- kind: static_structure
  footprint: {cx: 0.0, cy: -8.0, w: 30.0, h: 0.4, psi: 0.0}
- kind: appearing_structure
  footprint: {cx: 12.0, cy: 6.0, w: 18.0, h: 0.4, psi: 0.0}
  reveal_time: 1.0
""",
    "bushes": """\
name: bushes
duration: 3.0
tick_rate: 10.0
ego:
- {t: 0, x: 0, y: 0, heading: 0}
entities:
- kind: static_structure
  footprint: {cx: 0.0, cy: -8.0, w: 40.0, h: 0.4, psi: 0.0}
- kind: vegetation_clutter
  footprint: {cx: 8.0, cy: 6.0, w: 2.2, h: 2.2, psi: 0.0}
  jitter_amplitude: 0.45
  jitter_period: 1.6
- kind: vegetation_clutter
  footprint: {cx: 12.0, cy: 6.0, w: 2.2, h: 2.2, psi: 0.0}
  jitter_amplitude: 0.45
  jitter_period: 1.6
- kind: vegetation_clutter
  footprint: {cx: 16.0, cy: 6.0, w: 2.2, h: 2.2, psi: 0.0}
  jitter_amplitude: 0.45
  jitter_period: 1.6
""",
    "barrier": """\
name: barrier
duration: 3.0
tick_rate: 10.0
ego:
- {t: 0, x: 0, y: 0, heading: 0}
- {t: 3, x: 15, y: 0, heading: 0}
entities:
- kind: static_structure
  footprint: {cx: 30.0, cy: 4.0, w: 80.0, h: 0.4, psi: 0.0}
""",
}

MOVER_SCENE = "movers"
CLUTTER_SCENES = ("boundary", "bushes", "barrier")


def run_evgrid(*args):
    if shutil.which("evgrid") is None:
        pytest.fail("grid toolkit CLI (evgrid) not on PATH")
    result = subprocess.run(["evgrid", *args], capture_output=True, text=True)
    if result.returncode != 0:
        pytest.fail(f"evgrid {' '.join(args)} failed: {result.stderr}")
    return result


def build_corpus(root, seed):
    scripts = root / "scripts"
    scripts.mkdir(parents=True)
    for name, text in SCENES.items():
        script = scripts / f"{name}.yaml"
        script.write_text(text)
        run_evgrid("simulate", "--scenario", str(script), "--out", str(root), "--seed", str(seed))
        run_evgrid("detect-classic", "--dataset", str(root / name))
        run_evgrid("encode", "--dataset", str(root / name), "--encode", "5")
    return root


@pytest.fixture(scope="session")
def train_corpus(tmp_path_factory):
    return build_corpus(tmp_path_factory.mktemp("corpus_train"), seed=0)


@pytest.fixture(scope="session")
def test_corpus(tmp_path_factory):
    return build_corpus(tmp_path_factory.mktemp("corpus_test"), seed=9)


@pytest.fixture(scope="session")
def quick_model(train_corpus, tmp_path_factory):
    """Single-epoch artifact for contract and inference tests."""
    from detector_bridge import TrainSpec, train

    path = tmp_path_factory.mktemp("models") / "quick.pt"
    train(TrainSpec(dataset_dir=str(train_corpus), epochs=1, seed=0), path)
    return path


@pytest.fixture(scope="session")
def full_model(train_corpus, tmp_path_factory):
    """Fully trained artifact; returns (path, history, wall seconds)."""
    from detector_bridge import TrainSpec, train

    path = tmp_path_factory.mktemp("models") / "full.pt"
    start = time.monotonic()
    history = train(TrainSpec(dataset_dir=str(train_corpus), epochs=20, seed=0), path)
    return path, history, time.monotonic() - start


def prediction_lines(pred_dir, score_min=0.0):
    """All prediction rows in a directory with score >= score_min."""
    rows = []
    for path in sorted(pred_dir.glob("*.txt")):
        for line in path.read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if line and float(line.split()[-1]) >= score_min:
                rows.append(line)
    return rows
