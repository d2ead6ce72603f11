"""Batch evaluation helpers behind ``umbra bench`` / ``eval-*``."""

from __future__ import annotations

import dataclasses
import statistics
import time
from pathlib import Path

import numpy as np

from umbra.config import PipelineConfig
from umbra.imagecore import load_mask, load_png
from umbra.metrics import cd, confusion, detection_metrics, load_annotation, sri
from umbra.relight import remove_shadows

IMAGE_SUFFIXES = (".png",)


def list_images(directory) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"not a directory: {d}")
    return sorted(p for p in d.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def paired(dir_a, dir_b) -> list[tuple[Path, Path]]:
    """Files present in both directories under the same name."""
    b = {p.name: p for p in list_images(dir_b)}
    pairs = [(p, b[p.name]) for p in list_images(dir_a) if p.name in b]
    if not pairs:
        raise FileNotFoundError(f"no matching file names between {dir_a} and {dir_b}")
    return pairs


def run_removal(img, mask, cfg: PipelineConfig, **kwargs):
    return remove_shadows(
        img,
        mask,
        cfg.relight,
        penumbra_radius=cfg.penumbra_radius,
        smoothing=cfg.smoothing,
        threads=cfg.threads,
        **kwargs,
    )


def eval_masks(pred_dir, gt_dir) -> tuple[list[dict], dict]:
    rows = []
    total = None
    for pred_path, gt_path in paired(pred_dir, gt_dir):
        c = confusion(load_mask(pred_path), load_mask(gt_path))
        total = c if total is None else total + c
        rows.append({"image": pred_path.name, **detection_metrics(c)})
    return rows, {"image": "ALL", **detection_metrics(total)}


def eval_removal(result_dir, annotation_dir) -> tuple[list[dict], dict]:
    rows = []
    for res_path, ann_path in paired(result_dir, annotation_dir):
        img = load_png(res_path)
        ann = load_annotation(ann_path)
        rows.append({"image": res_path.name, "sri": sri(img, ann), "cd": cd(img, ann)})
    agg = {
        "image": "MEAN",
        "sri": float(np.mean([r["sri"] for r in rows])),
        "cd": float(np.mean([r["cd"] for r in rows])),
    }
    return rows, agg


def bench(
    image_dir,
    mask_dir,
    cfg: PipelineConfig,
    annotation_dir=None,
    neighbors: list[int] | None = None,
    repeats: int = 3,
) -> list[dict]:
    """Time removal per image (median of ``repeats``) for each neighbour count.

    Returns one summary record per ``n`` with mean SRI/CD (when annotations
    are given) and per-image timings.
    """
    cases = []
    for img_path, mask_path in paired(image_dir, mask_dir):
        ann = None
        if annotation_dir is not None:
            ann_path = Path(annotation_dir) / img_path.name
            if ann_path.exists():
                ann = load_annotation(ann_path)
        cases.append((img_path.name, load_png(img_path), load_mask(mask_path), ann))

    summaries = []
    for n in neighbors or [cfg.relight.n_neighbors]:
        run_cfg = dataclasses.replace(cfg, relight=dataclasses.replace(cfg.relight, n_neighbors=n))
        per_image = []
        for name, img, mask, ann in cases:
            times = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                out, _ = run_removal(img, mask, run_cfg)
                times.append(time.perf_counter() - t0)
            rec = {"image": name, "time": statistics.median(times)}
            if ann is not None:
                rec["sri"] = sri(out, ann)
                rec["cd"] = cd(out, ann)
            per_image.append(rec)
        summary = {
            "n_neighbors": n,
            "images": len(per_image),
            "median_time": statistics.median(r["time"] for r in per_image),
            "mean_time": float(np.mean([r["time"] for r in per_image])),
            "per_image": per_image,
        }
        scored = [r for r in per_image if "sri" in r]
        if scored:
            summary["sri"] = float(np.mean([r["sri"] for r in scored]))
            summary["cd"] = float(np.mean([r["cd"] for r in scored]))
        summaries.append(summary)
    return summaries
