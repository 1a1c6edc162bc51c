"""Command-line surface: adapt, eval, inspect, gradcheck, regions.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import container
from .errors import LogitBiasError
from .global_bias import GlobalConfig
from .numerics import mean_softmax_entropy, mean_softmax_entropy_gradient
from .pipeline import MODES, PRESETS, TTAConfig, adapt_sample, emit_report, evaluate_dataset, report_to_json
from .spatial_bias import SpatialConfig, category_aware_map, significant_region_count, topk_regions

GRADCHECK_TOLERANCE = 1e-4
GRADCHECK_STEP = 1e-4


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", choices=sorted(PRESETS), default="cross-dataset")
    parser.add_argument("--alpha", type=float, default=None, help="global bias learning rate")
    parser.add_argument("--beta", type=float, default=None, help="spatial bias learning rate")
    parser.add_argument("--rho", type=float, default=None, help="view selection rate in (0, 1]")
    parser.add_argument("--topk", type=int, default=None, help="spatial regions kept")
    parser.add_argument("--steps", type=int, default=None, help="descent steps per learner")
    parser.add_argument("--tau", type=float, default=None, help="softmax temperature (default 0.01)")


def _build_config(args: argparse.Namespace, mode: str = "both") -> TTAConfig:
    base = PRESETS[args.preset]
    g, s = base.global_cfg, base.spatial_cfg
    return TTAConfig(
        global_cfg=GlobalConfig(
            alpha=g.alpha if args.alpha is None else args.alpha,
            rho=g.rho if args.rho is None else args.rho,
            steps=g.steps if args.steps is None else args.steps,
        ),
        spatial_cfg=SpatialConfig(
            beta=s.beta if args.beta is None else args.beta,
            topk=s.topk if args.topk is None else args.topk,
            steps=s.steps if args.steps is None else args.steps,
            map_temperature=s.map_temperature,
        ),
        tau=base.tau if args.tau is None else args.tau,
        mode=mode,
    )


def cmd_adapt(args: argparse.Namespace) -> int:
    cfg = _build_config(args, mode=args.mode)
    classes = container.read_class_file(args.classes)
    record = container.read_sample_file(args.sample)
    result = adapt_sample(record, classes, cfg)
    doc = {
        "sample": args.sample,
        "mode": cfg.mode,
        "pred": result.predicted_class,
        "pred_name": classes.names[result.predicted_class],
        "zeroshot_pred": result.zero_shot_class,
        "label": result.label,
        "fused_logits": result.fused_logits.tolist(),
        "global_bias": result.global_bias.tolist(),
        "spatial_bias": result.spatial_bias.tolist(),
    }
    print(json.dumps(doc, indent=2))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for mode in modes:
        if mode not in MODES:
            raise UsageError(f"unknown mode {mode!r} in --modes")
    cfg = _build_config(args)
    manifest = container.read_manifest(args.samples)
    report = evaluate_dataset(manifest, cfg, modes=modes, jobs=args.jobs, keep_samples=args.per_sample)
    if args.out is None:
        sys.stdout.write(report_to_json(report))
    else:
        emit_report(report, args.out, format=args.format)
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    kind = container.peek_kind(args.file)
    if kind == container.KIND_CLASS_SET:
        cs = container.read_class_file(args.file)
        doc = {
            "kind": "class_set",
            "version": container.VERSION,
            "classes": cs.class_count,
            "dim": cs.dim,
            "names": cs.names,
            "embedding_stats": _stats(cs.embeddings),
        }
    else:
        rec = container.read_sample_file(args.file)
        doc = {
            "kind": "sample",
            "version": container.VERSION,
            "views": rec.view_count,
            "dim": rec.dim,
            "grid_w": rec.grid_width,
            "grid_h": rec.grid_height,
            "label": rec.label,
            "view_stats": _stats(rec.view_features),
            "spatial_stats": _stats(rec.spatial_features),
        }
    print(json.dumps(doc, indent=2))
    return 0


def _stats(values: np.ndarray) -> dict:
    return {
        "min": float(values.min()),
        "max": float(values.max()),
        "mean": float(values.mean()),
    }


def cmd_gradcheck(args: argparse.Namespace) -> int:
    """Compare the analytic bias gradient against central finite differences."""
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(args.trials):
        m = int(rng.integers(1, 17))
        c = int(rng.integers(2, 51))
        logits = rng.normal(scale=3.0, size=(m, c))
        bias = rng.normal(scale=0.5, size=c)
        analytic = mean_softmax_entropy_gradient(logits, bias) + args.perturb
        fd = np.empty(c)
        for j in range(c):
            step = np.zeros(c)
            step[j] = GRADCHECK_STEP
            _, h_plus = mean_softmax_entropy(logits, bias + step)
            _, h_minus = mean_softmax_entropy(logits, bias - step)
            fd[j] = (h_plus - h_minus) / (2 * GRADCHECK_STEP)
        rel = float(np.max(np.abs(analytic - fd)) / max(np.max(np.abs(fd)), 1e-12))
        worst = max(worst, rel)
    passed = worst < GRADCHECK_TOLERANCE
    print(
        f"gradcheck: {args.trials} trials, max relative error {worst:.3e} "
        f"({'PASS' if passed else 'FAIL'} at {GRADCHECK_TOLERANCE:.0e})"
    )
    return 0 if passed else 1


def cmd_regions(args: argparse.Namespace) -> int:
    if args.samples is not None:
        manifest = container.read_manifest(args.samples)
        classes = container.read_class_file(manifest.class_file)
        counts = []
        for path in manifest.sample_paths:
            rec = container.read_sample_file(path)
            relevance = category_aware_map(rec.spatial_features, classes.embeddings)
            counts.append(significant_region_count(relevance, args.threshold))
        doc = {
            "dataset": manifest.dataset_name,
            "threshold": args.threshold,
            "significant_counts": counts,
            "avg_significant": float(np.mean(counts)),
        }
    else:
        classes = container.read_class_file(args.classes)
        rec = container.read_sample_file(args.sample)
        relevance = category_aware_map(rec.spatial_features, classes.embeddings)
        doc = {
            "sample": args.sample,
            "threshold": args.threshold,
            "significant": significant_region_count(relevance, args.threshold),
            "topk": topk_regions(relevance, args.topk),
        }
    print(json.dumps(doc, indent=2))
    return 0


class UsageError(Exception):
    """Flag combinations argparse cannot catch on its own; exits 2."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logitbias",
        description="Single-image test-time adaptation via global and spatial logit biases.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_adapt = sub.add_parser("adapt", help="adapt one sample and print the fused prediction")
    p_adapt.add_argument("--sample", required=True, help="sample GSBE file")
    p_adapt.add_argument("--classes", required=True, help="class-set GSBE file")
    p_adapt.add_argument("--mode", choices=MODES, default="both")
    _add_config_flags(p_adapt)
    p_adapt.set_defaults(func=cmd_adapt)

    p_eval = sub.add_parser("eval", help="evaluate a manifest across ablation modes")
    p_eval.add_argument("--samples", required=True, help="dataset manifest JSON")
    p_eval.add_argument("--modes", default="zeroshot,both", help="comma-separated mode list")
    p_eval.add_argument("--out", default=None, help="report path (stdout if omitted)")
    p_eval.add_argument("--format", choices=("json", "csv"), default="json")
    p_eval.add_argument("--jobs", type=int, default=1, help="concurrent sample workers")
    p_eval.add_argument("--per-sample", action="store_true", help="include per-sample rows")
    _add_config_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_inspect = sub.add_parser("inspect", help="print header, dims, and summary stats of a GSBE file")
    p_inspect.add_argument("file", help="GSBE file to inspect")
    p_inspect.set_defaults(func=cmd_inspect)

    p_grad = sub.add_parser("gradcheck", help="finite-difference check of the bias gradient kernel")
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.add_argument("--trials", type=int, default=100)
    p_grad.add_argument(
        "--perturb",
        type=float,
        default=0.0,
        help="offset added to the analytic gradient (negative-control testing)",
    )
    p_grad.set_defaults(func=cmd_gradcheck)

    p_regions = sub.add_parser(
        "regions", help="significant-region count and Top-K selection for a sample or manifest"
    )
    p_regions.add_argument("--sample", default=None, help="sample GSBE file")
    p_regions.add_argument("--classes", default=None, help="class-set GSBE file")
    p_regions.add_argument("--samples", default=None, help="manifest JSON for dataset-wide average")
    p_regions.add_argument("--threshold", type=float, default=0.1)
    p_regions.add_argument("--topk", type=int, default=16)
    p_regions.set_defaults(func=cmd_regions)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gradcheck" and args.trials < 1:
        parser.error("--trials must be >= 1")
    if args.command == "regions":
        if args.samples is None and (args.sample is None or args.classes is None):
            parser.error("regions needs either --samples MANIFEST or --sample and --classes")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except LogitBiasError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
