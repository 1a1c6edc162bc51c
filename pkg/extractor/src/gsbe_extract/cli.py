"""Batch extraction CLI: images -> GSBE sample files + class file + manifest.

Images can come from a directory (class-named subdirectories give
labels; loose images stay unlabeled) or from a list file with
`path<TAB>classname` lines. Extraction is deterministic under a fixed
seed and checkpoint; per-image crop seeds are seed + image index.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from PIL import Image

from . import gsbe
from .encoder import DEFAULT_MODEL, ClipEncoder

IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png", ".bmp", ".webp"}


def collect_images(source: Path) -> list[tuple[Path, str | None]]:
    """(path, class name or None) pairs in deterministic order."""
    if source.is_dir():
        entries: list[tuple[Path, str | None]] = []
        for path in sorted(source.iterdir()):
            if path.is_dir():
                for img in sorted(path.iterdir()):
                    if img.suffix.lower() in IMAGE_EXTENSIONS:
                        entries.append((img, path.name))
            elif path.suffix.lower() in IMAGE_EXTENSIONS:
                entries.append((path, None))
        return entries
    if source.is_file():
        entries = []
        for line in source.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            img = (source.parent / parts[0]).resolve()
            entries.append((img, parts[1] if len(parts) > 1 else None))
        return entries
    raise FileNotFoundError(f"image source not found: {source}")


def read_class_names(path: Path) -> list[str]:
    names = [line.strip() for line in path.read_text(encoding="utf-8").splitlines()]
    return [n for n in names if n]


def run_extraction(args: argparse.Namespace) -> int:
    class_names = read_class_names(Path(args.classes))
    if len(class_names) < 2:
        print(f"error: need at least 2 class names in {args.classes}", file=sys.stderr)
        return 1
    if len(set(class_names)) != len(class_names):
        print(f"error: duplicate class names in {args.classes}", file=sys.stderr)
        return 1
    class_index = {name: i for i, name in enumerate(class_names)}

    entries = collect_images(Path(args.images))
    if not entries:
        print(f"error: no images under {args.images}", file=sys.stderr)
        return 1
    unknown = sorted({c for _, c in entries if c is not None and c not in class_index})
    if unknown:
        print(f"error: image classes not in class list: {unknown}", file=sys.stderr)
        return 1

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    encoder = ClipEncoder(args.model, device=args.device)
    crop_scale = (args.crop_scale[0], args.crop_scale[1])

    embeddings = encoder.encode_class_set(class_names, args.prompts)
    gsbe.write_class_file(out / "classes.gsbe", class_names, embeddings)

    side = encoder.grid_side
    sample_names = []
    for index, (path, class_name) in enumerate(entries):
        image = Image.open(path).convert("RGB")
        views = encoder.encode_views(image, args.views, seed=args.seed + index, crop_scale=crop_scale)
        spatial = encoder.encode_spatial_grid(image)
        label = class_index[class_name] if class_name is not None else -1
        sample_name = f"{index:05d}_{path.stem}.gsbe"
        gsbe.write_sample_file(out / sample_name, views, spatial, side, side, label)
        sample_names.append(sample_name)
        if args.verbose:
            print(f"[{index + 1}/{len(entries)}] {path.name} -> {sample_name} (label {label})")

    gsbe.write_manifest(
        out / "manifest.json",
        args.dataset_name,
        "classes.gsbe",
        sample_names,
        extraction={
            "model": encoder.model_name,
            "seed": args.seed,
            "views": args.views,
            "prompts": args.prompts,
            "crop_scale": list(crop_scale),
            "tau": encoder.tau,
            "grid_side": side,
            "dim": encoder.embed_dim,
        },
    )
    print(f"wrote {len(sample_names)} samples to {out / 'manifest.json'} (tau={encoder.tau:.4g})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsbe-extract",
        description="Extract CLIP features from images into GSBE files plus a manifest.",
    )
    parser.add_argument("--images", required=True, help="image directory or list file")
    parser.add_argument("--classes", required=True, help="text file of class names, one per line")
    parser.add_argument("--views", type=int, default=8, help="views per image incl. the original")
    parser.add_argument("--seed", type=int, default=0, help="base crop seed")
    parser.add_argument("--prompts", choices=("single", "ensemble"), default="single")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--model", default=DEFAULT_MODEL, help="checkpoint name or local path")
    parser.add_argument("--device", default="cpu")
    parser.add_argument(
        "--crop-scale", type=float, nargs=2, default=[0.5, 1.0], metavar=("LO", "HI"),
        help="square crop side range, as fractions of the short edge",
    )
    parser.add_argument("--dataset-name", default="extracted")
    parser.add_argument("--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.views < 1:
        parser.error("--views must be >= 1")
    if not 0 < args.crop_scale[0] <= args.crop_scale[1] <= 1:
        parser.error("--crop-scale must satisfy 0 < LO <= HI <= 1")
    try:
        return run_extraction(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
