"""Command-line entry point for the bridge."""

import argparse
import sys
from pathlib import Path

from .data import DatasetFormatError
from .runner import EXPLAINER_CHOICES, BridgeConfig, run_reference_explainers


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="explainer-bridge",
        description="Run reference TreeSHAP/LIME explainers over a generated "
                    "dataset and write interchange attribution files.")
    p.add_argument("--dataset", required=True, type=Path,
                   help="dataset CSV (the .meta.json sidecar must sit next to it)")
    p.add_argument("--out-dir", required=True, type=Path,
                   help="directory for predictions.csv and attr_<explainer>.json")
    p.add_argument("--explainers", default="both",
                   choices=("treeshap", "lime", "both"),
                   help="which explainers to run (default both)")
    p.add_argument("--trees", type=int, default=100,
                   help="forest size (default 100)")
    p.add_argument("--train-fraction", type=float, default=0.8,
                   help="training split fraction (default 0.8)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for split, forest, and explainer sampling")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    explainers = EXPLAINER_CHOICES if args.explainers == "both" else (args.explainers,)
    try:
        cfg = BridgeConfig(dataset=args.dataset, out_dir=args.out_dir,
                           explainers=explainers, num_trees=args.trees,
                           train_fraction=args.train_fraction, seed=args.seed)
        result = run_reference_explainers(cfg)
    except (DatasetFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"trained on {result.num_train}, predicted {result.num_test} "
          f"(wrote {result.predictions_path})")
    for name, path in result.attribution_paths.items():
        backend = result.backends[name]
        print(f"{name}: {backend.kind} backend, wrote {path}")
    for line in result.warnings:
        print(f"warning: {line}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
