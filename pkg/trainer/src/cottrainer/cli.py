"""Command line: train a model on a dataset directory and report accuracy."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .data import DataError, load_dataset
from .train import TrainConfig, build_model, train


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="cottrainer")
    parser.add_argument("dataset", help="dataset directory")
    parser.add_argument("--out", required=True, help="run output directory")
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--lr", type=float, default=3e-4)
    parser.add_argument("--layers", type=int, default=6)
    parser.add_argument("--heads", type=int, default=16)
    parser.add_argument("--width", type=int, default=256)
    parser.add_argument("--context", type=int, default=512)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--eval-limit", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        dataset = load_dataset(args.dataset)
        model = build_model(dataset, layers=args.layers, heads=args.heads,
                            width=args.width, context=args.context)
        config = TrainConfig(steps=args.steps, batch_size=args.batch_size,
                             lr=args.lr, seed=args.seed,
                             eval_limit=args.eval_limit)
        report = train(model, dataset, config, run_dir=args.out)
    except DataError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    print(f"protocol={report.protocol} id_acc={report.id_accuracy:.3f} "
          f"ood_acc={report.ood_accuracy:.3f} "
          f"wall={report.wall_time_s:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
