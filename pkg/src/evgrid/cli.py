"""Batch command-line entry points.

Subcommands:
    simulate        run a scenario through fusion, write a dataset
    detect-classic  run the classic clusterer over a dataset
    encode          export 3/5-channel tensors for a dataset
    eval            precision/recall evaluation of prediction files
    bench           steady-state fusion timing

Exit codes: 0 ok, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import cluster, datakit, gridio, metrics, scenarios
from .fusion import FusionConfig, FusionPipeline
from .grid import GridGeometry, encode_grid
from .scene import load_script

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


def _load_scenario(spec: str):
    if spec in scenarios.BUILDERS:
        return scenarios.canned_scenario(spec)
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"scenario {spec!r} is neither a canned name nor an existing file")
    try:
        return load_script(path)
    except Exception as e:
        raise DataError(f"failed to parse scenario file {spec}: {e}") from e


def _write_summary(out_dir: Path, entries: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"{k}={v}" for k, v in entries.items()]
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n")


def _cluster_params(args) -> cluster.ClusterParams:
    try:
        return cluster.ClusterParams(
            m_D_min=args.mdmin, eps_d=args.eps_d, eps_v=args.eps_v, eps_n=args.eps_n
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e


def cmd_simulate(args) -> int:
    script = _load_scenario(args.scenario)
    out = Path(args.out)
    ds = datakit.write_dataset(out, script, seed=args.seed)
    if args.dump_grids:
        # raw per-frame snapshots outside the dataset tree
        dump = Path(args.dump_grids)
        dump.mkdir(parents=True, exist_ok=True)
        for fid in ds.frame_ids():
            data = ds.grid_path(fid).read_bytes()
            (dump / ds.grid_path(fid).name).write_bytes(data)
    n = len(ds.frame_ids())
    _write_summary(ds.root, {"scenario": script.name, "seed": args.seed, "frames": n})
    print(f"wrote {n} frames to {ds.root}")
    return EXIT_OK


def cmd_detect_classic(args) -> int:
    ds = datakit.ScenarioDataset(root=Path(args.dataset))
    if not ds.frames_dir.exists():
        raise DataError(f"{ds.frames_dir} does not exist")
    params = _cluster_params(args)
    ds.predictions_dir.mkdir(parents=True, exist_ok=True)
    total = 0
    for fid in ds.frame_ids():
        grid = gridio.load_grid(ds.grid_path(fid))
        dets = cluster.classic_detect(grid, params)
        datakit.save_predictions(ds.prediction_path(fid), fid, dets)
        total += len(dets)
    _write_summary(ds.root, {"predictions": total, "frames": len(ds.frame_ids())})
    print(f"wrote predictions for {len(ds.frame_ids())} frames ({total} boxes)")
    return EXIT_OK


def cmd_encode(args) -> int:
    ds = datakit.ScenarioDataset(root=Path(args.dataset))
    if not ds.frames_dir.exists():
        raise DataError(f"{ds.frames_dir} does not exist")
    tensors = ds.root / "tensors"
    tensors.mkdir(parents=True, exist_ok=True)
    for fid in ds.frame_ids():
        grid = gridio.load_grid(ds.grid_path(fid))
        tensor = encode_grid(grid, mode=args.encode, v_max=args.v_max)
        gridio.save_tensor(tensors / f"{fid:06d}.evtn", tensor)
    print(f"encoded {len(ds.frame_ids())} frames as {args.encode}-channel tensors")
    return EXIT_OK


def cmd_eval(args) -> int:
    ds = datakit.ScenarioDataset(root=Path(args.dataset))
    pred_dir = Path(args.predictions) if args.predictions else ds.predictions_dir
    if not pred_dir.exists():
        raise DataError(f"prediction directory {pred_dir} does not exist")
    frames = []
    for fid in ds.frame_ids():
        gts = datakit.load_labels(ds.label_path(fid)) if ds.label_path(fid).exists() else []
        ppath = pred_dir / f"{fid:06d}.txt"
        preds = datakit.load_predictions(ppath) if ppath.exists() else []
        frames.append((preds, gts))
    try:
        curve = metrics.pr_curve(frames, iou_threshold=args.iou, ap_mode=args.ap_mode)
    except ValueError as e:
        raise DataError(str(e)) from e
    out = Path(args.out) if args.out else ds.root
    out.mkdir(parents=True, exist_ok=True)
    metrics.write_pr_csv(out / "pr_curve.csv", curve)
    classic_point = None
    summary = {"map": f"{curve.ap:.6f}", "iou": args.iou, "ap_mode": args.ap_mode}
    if args.classic_point:
        classic_point = (args.classic_point[0], args.classic_point[1])
        report = metrics.compare_to_classic(curve, classic_point)
        summary["classic_precision"] = f"{report.classic_precision:.6f}"
        summary["classic_recall"] = f"{report.classic_recall:.6f}"
        if report.precision_delta is not None:
            summary["precision_at_classic_recall"] = (
                f"{report.curve_precision_at_classic_recall:.6f}"
            )
            summary["precision_delta"] = f"{report.precision_delta:.6f}"
            summary["curve_beats_classic"] = int(report.precision_delta > 0)
        else:
            summary["precision_delta"] = "unreachable"
    metrics.plot_pr_curve(out / "pr_curve.png", curve, classic_point)
    _write_summary(out, summary)
    print(f"mAP = {curve.ap:.4f} ({len(frames)} frames); wrote {out / 'pr_curve.csv'}")
    return EXIT_OK


def cmd_bench(args) -> int:
    script = _load_scenario(args.scenario)
    geometry = GridGeometry()
    config = FusionConfig()
    pipeline = FusionPipeline(geometry=geometry, config=config, seed=args.seed)
    sim = datakit.SimParams(beam_count=args.beams)
    rng = np.random.default_rng(args.seed + 1)
    from .scene import ground_truth, interpolate_pose, raycast, step_scene  # noqa: F401

    dt = 1.0 / script.tick_rate
    prev = interpolate_pose(script.ego, 0.0)
    timings = []
    warmup = args.warmup
    times = script.frame_times
    for i, t in enumerate(times):
        ego = interpolate_pose(script.ego, float(t))
        world = step_scene(script, float(t))
        scan = raycast(world, ego, sim.beam_count, sim.max_range, sim.noise_sigma, rng)
        t0 = time.perf_counter()
        pipeline.step(scan, dpose=datakit._ego_delta(prev, ego), dt=dt)
        elapsed = time.perf_counter() - t0
        prev = ego
        if i >= warmup:
            timings.append(elapsed)
    if not timings:
        raise ConfigError("scenario too short for benchmarking after warmup")
    timings_ms = np.array(timings) * 1e3
    summary = {
        "frames": len(timings),
        "beams": sim.beam_count,
        "grid": f"{geometry.cols}x{geometry.rows}",
        "particles": len(pipeline.particles),
        "p50_ms": f"{np.percentile(timings_ms, 50):.2f}",
        "p99_ms": f"{np.percentile(timings_ms, 99):.2f}",
        "mean_ms": f"{timings_ms.mean():.2f}",
        "max_ms": f"{timings_ms.max():.2f}",
    }
    out = Path(args.out)
    _write_summary(out, summary)
    print("  ".join(f"{k}={v}" for k, v in summary.items()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evgrid", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write a dataset")
    p.add_argument("--scenario", required=True, help="canned scenario name or script file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-grids", default=None, help="extra directory for raw grid snapshots")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect-classic", help="classic clustering over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--mdmin", type=float, default=cluster.DEFAULT_M_D_MIN)
    p.add_argument("--eps-d", type=float, default=cluster.DEFAULT_EPS_D)
    p.add_argument("--eps-v", type=float, default=cluster.DEFAULT_EPS_V)
    p.add_argument("--eps-n", type=int, default=cluster.DEFAULT_EPS_N)
    p.set_defaults(func=cmd_detect_classic)

    p = sub.add_parser("encode", help="export channel tensors")
    p.add_argument("--dataset", required=True)
    p.add_argument("--encode", type=int, choices=(3, 5), default=3)
    p.add_argument("--v-max", type=float, default=30.0)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("eval", help="precision/recall evaluation")
    p.add_argument("--dataset", required=True)
    p.add_argument("--predictions", default=None, help="prediction dir (default: dataset's)")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--ap-mode", choices=("all-points", "11-point"), default="all-points")
    p.add_argument(
        "--classic-point",
        type=float,
        nargs=2,
        metavar=("PRECISION", "RECALL"),
        default=None,
        help="classic operating point to overlay on the curve",
    )
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="fusion timing")
    p.add_argument("--scenario", default="busy_intersection")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beams", type=int, default=1800)
    p.add_argument("--warmup", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
