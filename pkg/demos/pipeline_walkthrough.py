"""End-to-end walkthrough of the batch pipeline on one canned scene.

Chains the CLI stages the way a user would: simulate a scenario into a
dataset, run the classic clusterer over it, export detector-input tensors,
evaluate the predictions against ground truth with a fixed classic operating
point overlaid, and time the fusion loop.

Usage: python3 demos/pipeline_walkthrough.py [work_dir]
"""

import sys
from pathlib import Path

from evgrid.cli import main as cli


def run(args):
    print("\n$ evgrid " + " ".join(args))
    code = cli(args)
    if code != 0:
        raise SystemExit(f"stage failed with exit code {code}")


def main():
    work = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_output/pipeline")
    work.mkdir(parents=True, exist_ok=True)
    dataset = work / "single_mover"

    run(["simulate", "--scenario", "single_mover", "--out", str(work), "--seed", "0"])
    run(["detect-classic", "--dataset", str(dataset)])
    run(["encode", "--dataset", str(dataset), "--encode", "5"])
    run(["eval", "--dataset", str(dataset), "--classic-point", "0.51", "0.67"])
    run(["bench", "--scenario", "busy_intersection", "--out", str(work / "bench")])

    print("\nartifacts:")
    for p in sorted(work.rglob("*")):
        if p.is_file() and p.suffix in (".csv", ".png", ".txt"):
            print(f"  {p}")


if __name__ == "__main__":
    main()
