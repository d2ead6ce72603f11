"""Command-line entry point: ``umbra <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from umbra import bench as bench_mod
from umbra import synth
from umbra.config import ConfigError, PipelineConfig, load_config
from umbra.detect import detect_shadows
from umbra.imagecore import DimensionError, load_mask, load_png, save_mask, save_png
from umbra.superpix import label_image, slic_masked

EXIT_OK = 0
EXIT_IO = 3
EXIT_DIMENSION = 4
EXIT_CONFIG = 5

log = logging.getLogger("umbra")


def _add_config_flags(p: argparse.ArgumentParser, removal: bool = True) -> None:
    p.add_argument("--config", help="key=value config file (default: $UMBRA_CONFIG)")
    if not removal:
        return
    p.add_argument("--neighbors", type=int, help="nearest lit superpixels per shadow superpixel")
    p.add_argument("--superpixel-size", type=int, help="target pixels per superpixel")
    p.add_argument("--penumbra-radius", type=int, help="band radius for boundary smoothing")
    p.add_argument("--no-smoothing", action="store_true", help="skip boundary smoothing")
    p.add_argument("--threads", type=int, help="worker threads")


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config)
    overrides = {}
    for attr, key in (
        ("neighbors", "n_neighbors"),
        ("superpixel_size", "superpixel_size"),
        ("penumbra_radius", "penumbra_radius"),
        ("threads", "threads"),
    ):
        val = getattr(args, attr, None)
        if val is not None:
            overrides[key] = val
    if getattr(args, "no_smoothing", False):
        overrides["smoothing"] = False
    return cfg.with_overrides(overrides) if overrides else cfg


def _rgb(img):
    return np.repeat(img[..., None], 3, axis=2) if img.ndim == 2 else img


def cmd_detect(args) -> int:
    cfg = _config(args)
    img = _rgb(load_png(args.image))
    save_mask(detect_shadows(img, cfg.detect), args.output)
    return EXIT_OK


def cmd_remove(args) -> int:
    cfg = _config(args)
    img = _rgb(load_png(args.image))
    if args.mask:
        mask = load_mask(args.mask)
    elif args.auto_detect:
        mask = detect_shadows(img, cfg.detect)
    else:
        raise ConfigError("give --mask or --auto-detect")
    out, report = bench_mod.run_removal(img, mask, cfg, shuffle_seed=args.shuffle_seed)
    save_png(out, args.output)
    if args.report:
        Path(args.report).write_text("\n".join(report.to_lines()) + "\n")
    if args.side_by_side:
        save_png(np.concatenate([img, out], axis=1), args.side_by_side)
    if args.labels:
        spmap = slic_masked(img, mask, cfg.relight.superpixel_size, cfg.relight.compactness, cfg.relight.slic_iterations)
        save_png(label_image(spmap), args.labels)
    if report.diagnostic:
        log.warning(report.diagnostic)
    print(f"duration {report.duration:.3f}s  shadow_superpixels={len(report.records)}  fallback={report.n_fallback}")
    return EXIT_OK


def _print_table(rows, cols, as_json):
    if as_json:
        for r in rows:
            print(json.dumps(r, sort_keys=True))
        return
    print("\t".join(cols))
    for r in rows:
        print("\t".join(r[c] if isinstance(r[c], str) else f"{r[c]:.4f}" for c in cols))


def cmd_eval_mask(args) -> int:
    rows, agg = bench_mod.eval_masks(args.pred_dir, args.gt_dir)
    cols = ["image", "accuracy", "recall", "f1", "ber", "iou"]
    _print_table(rows + [agg], cols, args.json)
    return EXIT_OK


def cmd_eval_removal(args) -> int:
    rows, agg = bench_mod.eval_removal(args.result_dir, args.annotation_dir)
    _print_table(rows + [agg], ["image", "sri", "cd"], args.json)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    sweep = [int(v) for v in args.sweep.split(",")] if args.sweep else None
    summaries = bench_mod.bench(
        args.image_dir, args.mask_dir, cfg, args.annotations, sweep, args.repeats
    )
    if args.json_out:
        with open(args.json_out, "w") as fh:
            for s in summaries:
                fh.write(json.dumps(s, sort_keys=True) + "\n")
    print("n\timages\tmedian_s\tsri\tcd")
    for s in summaries:
        sri_v = f"{s['sri']:.4f}" if "sri" in s else "-"
        cd_v = f"{s['cd']:.3f}" if "cd" in s else "-"
        print(f"{s['n_neighbors']}\t{s['images']}\t{s['median_time']:.4f}\t{sri_v}\t{cd_v}")
    return EXIT_OK


def cmd_synth(args) -> int:
    names = synth.generate(args.out_dir, seed=args.seed, count=args.count, size=args.size)
    print(f"wrote {len(names)} scenes to {args.out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="umbra", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="threshold shadow detector, writes a mask PNG")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True)
    _add_config_flags(p, removal=False)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("remove", help="remove shadows given a mask")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--mask")
    src.add_argument("--auto-detect", action="store_true")
    p.add_argument("--report", help="write a per-superpixel text report")
    p.add_argument("--side-by-side", help="write input|result PNG")
    p.add_argument("--labels", help="write the superpixel label map as a random-colour PNG")
    p.add_argument("--shuffle-seed", type=int, help="permute the superpixel processing order (diagnostic)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_remove)

    p = sub.add_parser("eval-mask", help="detection metrics for matching mask files")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--json", action="store_true", help="one JSON record per line")
    p.set_defaults(func=cmd_eval_mask)

    p = sub.add_parser("eval-removal", help="SRI / CD on annotated region pairs")
    p.add_argument("result_dir")
    p.add_argument("annotation_dir")
    p.add_argument("--json", action="store_true", help="one JSON record per line")
    p.set_defaults(func=cmd_eval_removal)

    p = sub.add_parser("bench", help="timing and quality over a directory")
    p.add_argument("image_dir")
    p.add_argument("mask_dir")
    p.add_argument("--annotations", help="annotation directory for SRI/CD")
    p.add_argument("--sweep", help="comma-separated neighbour counts, e.g. 1,3,5,7,9,12,15")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--json-out", help="write one JSON summary per neighbour count")
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate synthetic shadow scenes")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--size", type=int, default=128)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"umbra: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DimensionError as exc:
        print(f"umbra: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except (OSError, ValueError) as exc:
        print(f"umbra: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
