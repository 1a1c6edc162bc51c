#!/usr/bin/env python3
"""Sweep the number of descent steps on a dataset and tabulate accuracy
and final mean entropy per mode, to see where extra steps stop helping.

Usage:
    python scripts/step_sweep.py --samples data/correction/manifest.json \
        --steps 0 1 2 3 5 8 --tau 1.0
"""

import argparse

from logitbias.container import read_manifest
from logitbias.global_bias import GlobalConfig
from logitbias.pipeline import TTAConfig, evaluate_dataset
from logitbias.spatial_bias import SpatialConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", required=True, help="dataset manifest JSON")
    parser.add_argument("--steps", type=int, nargs="+", default=[0, 1, 2, 3, 5, 8, 13])
    parser.add_argument("--alpha", type=float, default=1.0)
    parser.add_argument("--beta", type=float, default=1.0)
    parser.add_argument("--rho", type=float, default=0.5)
    parser.add_argument("--topk", type=int, default=16)
    parser.add_argument("--tau", type=float, default=0.01)
    args = parser.parse_args()

    manifest = read_manifest(args.samples)
    print(f"dataset: {manifest.dataset_name} ({len(manifest.sample_paths)} samples)")
    print(f"{'steps':>5}  {'top1(global)':>12}  {'top1(both)':>10}  "
          f"{'H_g(final)':>10}  {'H_s(final)':>10}")
    for steps in args.steps:
        cfg = TTAConfig(
            global_cfg=GlobalConfig(alpha=args.alpha, rho=args.rho, steps=steps),
            spatial_cfg=SpatialConfig(beta=args.beta, topk=args.topk, steps=steps),
            tau=args.tau,
        )
        report = evaluate_dataset(manifest, cfg, modes=["global", "both"])
        both = report.modes["both"]
        h_g = both.global_entropy_curve[-1] if both.global_entropy_curve else float("nan")
        h_s = both.spatial_entropy_curve[-1] if both.spatial_entropy_curve else float("nan")
        print(
            f"{steps:>5}  {report.modes['global'].top1:>12.4f}  {both.top1:>10.4f}  "
            f"{h_g:>10.4f}  {h_s:>10.4f}"
        )


if __name__ == "__main__":
    main()
