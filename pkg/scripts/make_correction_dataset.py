#!/usr/bin/env python3
"""Generate a synthetic correction dataset in GSBE format.

Each sample's original view weakly favors the wrong class while the
augmented views and spatial grid strongly favor the labeled class, so
zero-shot accuracy is 0 and adapted accuracy is 1 by construction.
Optional feature noise makes the samples non-identical while keeping
the margins intact.

Usage:
    python scripts/make_correction_dataset.py --out data/correction --samples 16
    logitbias eval --samples data/correction/manifest.json --modes zeroshot,both --tau 1.0
"""

import argparse
import math
from pathlib import Path

import numpy as np

from logitbias.container import (
    ClassEmbeddingSet,
    SampleRecord,
    write_class_file,
    write_manifest,
    write_sample_file,
)


def unit_vector_with_margin(margin, favored, rng=None, jitter=0.0):
    hi = (margin + math.sqrt(2.0 - margin * margin)) / 2.0
    lo = hi - margin
    vec = np.array([hi, lo] if favored == 0 else [lo, hi])
    if rng is not None and jitter > 0:
        vec = vec + rng.normal(scale=jitter, size=2)
    return vec / np.linalg.norm(vec)


def build_sample(rng, label, n_aug, grid, weak_margin, strong_margin, jitter):
    wrong = 1 - label
    views = [unit_vector_with_margin(weak_margin, wrong, rng, jitter)]
    views += [
        unit_vector_with_margin(strong_margin, label, rng, jitter) for _ in range(n_aug)
    ]
    spatial = [
        unit_vector_with_margin(strong_margin, label, rng, jitter)
        for _ in range(grid * grid)
    ]
    return SampleRecord(
        view_features=np.array(views, dtype=np.float32),
        spatial_features=np.array(spatial, dtype=np.float32),
        grid_width=grid,
        grid_height=grid,
        label=label,
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--samples", type=int, default=16)
    parser.add_argument("--views", type=int, default=8, help="augmented views per sample")
    parser.add_argument("--grid", type=int, default=4, help="spatial grid side length")
    parser.add_argument("--weak-margin", type=float, default=0.1)
    parser.add_argument("--strong-margin", type=float, default=1.0)
    parser.add_argument("--jitter", type=float, default=0.02, help="feature noise scale")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    classes = ClassEmbeddingSet(names=["alpha", "beta"], embeddings=np.eye(2, dtype=np.float32))
    write_class_file(classes, out / "classes.gsbe")

    names = []
    for i in range(args.samples):
        label = i % 2
        record = build_sample(
            rng, label, args.views, args.grid, args.weak_margin, args.strong_margin, args.jitter
        )
        write_sample_file(record, out / f"sample_{i:04d}.gsbe")
        names.append(f"sample_{i:04d}.gsbe")

    write_manifest(
        out / "manifest.json",
        "synthetic-correction",
        "classes.gsbe",
        names,
        extra={
            "generator": {
                "seed": args.seed,
                "views": args.views,
                "grid": args.grid,
                "weak_margin": args.weak_margin,
                "strong_margin": args.strong_margin,
                "jitter": args.jitter,
            }
        },
    )
    print(f"wrote {args.samples} samples to {out}/manifest.json")
    print(f"try: logitbias eval --samples {out}/manifest.json --modes zeroshot,both --tau 1.0")


if __name__ == "__main__":
    main()
