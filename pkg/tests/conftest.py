import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from evgrid.datakit import SimParams, _ego_delta
from evgrid.fusion import FusionPipeline
from evgrid.scene import interpolate_pose, raycast, step_scene


def run_pipeline(script, seed=0, nframes=None, sim=None, per_frame=None):
    """Run a scene script through fusion; return the pipeline.

    ``per_frame(frame_id, pipeline, world, ego, scan)`` is collected into a
    list when given.  Mirrors the frame loop of datakit.simulate_scenario.
    """
    sim = sim or SimParams()
    pipe = FusionPipeline(seed=seed)
    rng = np.random.default_rng(seed + 1)
    prev = interpolate_pose(script.ego, 0.0)
    dt = 1.0 / script.tick_rate
    times = script.frame_times if nframes is None else script.frame_times[:nframes]
    collected = []
    for i, t in enumerate(times):
        ego = interpolate_pose(script.ego, float(t))
        world = step_scene(script, float(t))
        scan = raycast(world, ego, sim.beam_count, sim.max_range, sim.noise_sigma, rng)
        pipe.step(scan, dpose=_ego_delta(prev, ego), dt=dt)
        prev = ego
        if per_frame is not None:
            collected.append(per_frame(i, pipe, world, ego, scan))
    return pipe, collected


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
