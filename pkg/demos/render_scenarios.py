"""Render the five failure-archetype scenes as color grid images.

For each scene the fused grid after a few seconds is drawn with the standard
color coding (static red, free green, dynamic blue, ambiguous magenta/cyan,
unknown white), with classic clustering boxes in black and ground truth
dashed in dark green.

Usage: python3 demos/render_scenarios.py [out_dir]
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from evgrid import FIGURE_SUITE, canned_scenario, classic_detect, corners, ground_truth
from evgrid.datakit import SimParams, simulate_scenario
from evgrid.grid import colorize_planes
from evgrid.scene import interpolate_pose, raycast, step_scene


def draw_box(ax, box, **kwargs):
    pts = corners(box)
    ax.plot(np.append(pts[:, 0], pts[0, 0]), np.append(pts[:, 1], pts[0, 1]), **kwargs)


def render(name, out_dir, seed=0, frames=30):
    script = canned_scenario(name)
    grid = gts = None
    for frame_id, grid, gts in simulate_scenario(script, seed=seed):
        if frame_id + 1 >= frames:
            break
    rgb = np.moveaxis(colorize_planes(grid.masses), 0, -1)
    geom = grid.geometry
    half_x = geom.cols * geom.resolution / 2
    half_y = geom.rows * geom.resolution / 2
    fig, ax = plt.subplots(figsize=(7, 7))
    ax.imshow(rgb, origin="lower", extent=(-half_x, half_x, -half_y, half_y))
    for det in classic_detect(grid):
        draw_box(ax, det.box, color="black", lw=1.5)
    for gt in gts:
        draw_box(ax, gt, color="darkgreen", lw=1.2, ls="--")
    ax.plot(0, 0, marker=(3, 0, -90), color="black", markersize=10)
    ax.set_xlim(-25, 35)
    ax.set_ylim(-20, 25)
    ax.set_title(f"{name} (frame {frames - 1}, seed {seed})")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    path = Path(out_dir) / f"{name}.png"
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    print(f"wrote {path}")


def main():
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_output")
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in FIGURE_SUITE + ("single_vehicle_split",):
        render(name, out_dir)


if __name__ == "__main__":
    main()
