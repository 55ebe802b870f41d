"""Command line: train a bridge model, run inference over tensor datasets."""

from __future__ import annotations

import argparse
import sys

from .infer import infer
from .train import TrainSpec, train


def cmd_train(args) -> int:
    spec = TrainSpec(
        dataset_dir=args.dataset,
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        mode=args.mode,
        seed=args.seed,
    )
    history = train(spec, args.model)
    print(
        f"trained {args.epochs} epochs; train loss "
        f"{history['train_loss'][0]:.4f} -> {history['train_loss'][-1]:.4f}; "
        f"saved {args.model}"
    )
    return 0


def cmd_infer(args) -> int:
    written = infer(args.model, args.dataset, args.out, args.score_min)
    print(f"wrote {len(written)} prediction files")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="detector-bridge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on exported tensors + labels")
    p.add_argument("--dataset", required=True, help="dataset root with scenario dirs")
    p.add_argument("--model", required=True, help="output model artifact path")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--mode", type=int, choices=(3, 5), default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="write prediction files for a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", default=None, help="output root (default: next to tensors)")
    p.add_argument("--score-min", type=float, default=0.05)
    p.set_defaults(func=cmd_infer)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
