"""Shadow detection scores and region-pair removal scores.

Detection metrics follow the usual definitions with shadow as the positive
class, reported as percentages.  Removal is scored on annotated pairs of a
shadowed region and a lit region of the same material:

* SRI, the shadow/reference ratio of mean luminance clipped to ``[0, 2]``,
  averaged over pairs (1 is perfect);
* CD, the mean absolute per-channel gap between the two regions' mean RGB
  on the 0-255 scale, averaged over pairs (0 is perfect).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from umbra.imagecore import DimensionError, as_mask, as_rgb, rgb_to_gray

MIN_PAIR_PIXELS = 50


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other):
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn
        )


def confusion(pred, gt) -> ConfusionCounts:
    pred = as_mask(pred)
    gt = as_mask(gt)
    if pred.shape != gt.shape:
        raise DimensionError(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    tn = int(pred.size - tp - fp - fn)
    return ConfusionCounts(tp, fp, tn, fn)


def _rate(num, den, perfect):
    if den == 0:
        return 1.0 if perfect else 0.0
    return num / den


def detection_metrics(c: ConfusionCounts) -> dict[str, float]:
    """Accuracy, precision, recall, F1, BER and IoU in percent.

    A 0/0 term counts as perfect when the class it concerns is absent from
    both masks, and as 0 otherwise.
    """
    n = c.total
    if n == 0:
        raise ValueError("no pixels evaluated")
    no_shadow = (c.tp + c.fn == 0) and (c.tp + c.fp == 0)
    no_lit = (c.tn + c.fp == 0) and (c.tn + c.fn == 0)

    recall = _rate(c.tp, c.tp + c.fn, no_shadow)
    precision = _rate(c.tp, c.tp + c.fp, no_shadow)
    specificity = _rate(c.tn, c.tn + c.fp, no_lit)
    if precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    iou = _rate(c.tp, c.tp + c.fp + c.fn, no_shadow)
    return {
        "accuracy": 100.0 * (c.tp + c.tn) / n,
        "precision": 100.0 * precision,
        "recall": 100.0 * recall,
        "f1": 100.0 * f1,
        "ber": 100.0 * (1.0 - 0.5 * (recall + specificity)),
        "iou": 100.0 * iou,
    }


@dataclass
class RegionPairAnnotation:
    """Paired shadow / reference regions on an image of ``shape`` (H, W).

    ``pairs`` holds ``(pair_id, shadow_index, reference_index)`` with flat
    raster indices.
    """

    shape: tuple[int, int]
    pairs: list[tuple[int, np.ndarray, np.ndarray]]

    def validate(self) -> None:
        for pid, s, r in self.pairs:
            if len(s) < MIN_PAIR_PIXELS or len(r) < MIN_PAIR_PIXELS:
                raise ValueError(f"pair {pid} has fewer than {MIN_PAIR_PIXELS} pixels on a side")
            if np.intersect1d(s, r).size:
                raise ValueError(f"pair {pid} shadow and reference regions overlap")


def save_annotation(ann: RegionPairAnnotation, path: str | os.PathLike) -> None:
    """Encode as RGB PNG: R = pair id, G = 0 shadow / 255 reference, B = 0."""
    h, w = ann.shape
    rgb = np.zeros((h * w, 3), dtype=np.uint8)
    for pid, s, r in ann.pairs:
        if not 1 <= pid <= 255:
            raise ValueError("pair ids must be in 1..255")
        rgb[s, 0] = pid
        rgb[r, 0] = pid
        rgb[r, 1] = 255
    Image.fromarray(rgb.reshape(h, w, 3)).save(path, format="PNG")


def load_annotation(path: str | os.PathLike) -> RegionPairAnnotation:
    with Image.open(path) as im:
        if im.mode != "RGB":
            raise ValueError(f"{path}: annotation must be an 8-bit RGB PNG")
        arr = np.asarray(im, dtype=np.uint8)
    h, w = arr.shape[:2]
    pid = arr[..., 0].ravel()
    role = arr[..., 1].ravel() >= 128
    pairs = []
    for p in np.unique(pid[pid > 0]).tolist():
        sel = pid == p
        pairs.append((p, np.flatnonzero(sel & ~role), np.flatnonzero(sel & role)))
    ann = RegionPairAnnotation((h, w), pairs)
    ann.validate()
    return ann


def _pair_means(result, ann):
    img = as_rgb(result)
    if img.shape[:2] != tuple(ann.shape):
        raise DimensionError("annotation and image differ in size")
    flat = img.reshape(-1, 3)
    for _, s, r in ann.pairs:
        yield flat[s].mean(axis=0), flat[r].mean(axis=0)


def sri(result, ann: RegionPairAnnotation) -> float:
    if not ann.pairs:
        raise ValueError("annotation has no pairs")
    vals = []
    for ms, mr in _pair_means(result, ann):
        ls, lr = float(rgb_to_gray(ms[None, None])[0, 0]), float(rgb_to_gray(mr[None, None])[0, 0])
        vals.append(np.clip(ls / lr, 0.0, 2.0) if lr > 0 else (1.0 if ls == 0 else 2.0))
    return float(np.mean(vals))


def cd(result, ann: RegionPairAnnotation) -> float:
    if not ann.pairs:
        raise ValueError("annotation has no pairs")
    vals = [float(np.mean(np.abs(ms - mr))) * 255.0 for ms, mr in _pair_means(result, ann)]
    return float(np.mean(vals))
