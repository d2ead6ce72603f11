"""Synthetic multiplicative-shadow scenes with known ground truth.

A scene is a textured, uniformly coloured background with one polygonal
shadow darkened by per-channel factors in ``[0.2, 0.7]``.  A 2-pixel linear
ramp outside the polygon mimics a penumbra; the mask covers the polygon
only.  Each scene also carries a region-pair annotation: the shadow
interior vs a ring of lit pixels around it.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from umbra.imagecore import save_mask, save_png, to_uint8
from umbra.metrics import RegionPairAnnotation, save_annotation
from umbra.penumbra import erode, manhattan_distance

TEXTURES = ("noise", "checker", "gradient")
RAMP_WIDTH = 2


@dataclass
class SynthScene:
    image: np.ndarray
    clean: np.ndarray
    mask: np.ndarray
    factors: np.ndarray
    texture: str
    annotation: RegionPairAnnotation

    @property
    def interior(self) -> np.ndarray:
        return self.annotation.pairs[0][1]


def _texture(rng, kind, h, w):
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    if kind == "noise":
        return 1.0 + rng.uniform(-0.08, 0.08, size=(h, w))
    if kind == "checker":
        period = int(rng.integers(4, 8))
        sign = ((yy // period + xx // period) % 2) * 2 - 1
        return 1.0 + 0.05 * sign
    theta = rng.uniform(0, 2 * math.pi)
    ramp = (np.cos(theta) * (xx - w / 2) + np.sin(theta) * (yy - h / 2)) / max(h, w)
    return 1.0 + 0.08 * ramp


def _polygon_mask(rng, h, w):
    cy = rng.uniform(0.4, 0.6) * h
    cx = rng.uniform(0.4, 0.6) * w
    n = int(rng.integers(5, 9))
    angles = np.sort(rng.uniform(0, 2 * math.pi, n))
    radius = min(h, w) * rng.uniform(0.18, 0.26, n)
    pts = [(cx + r * math.cos(a), cy + r * math.sin(a)) for a, r in zip(angles, radius)]
    canvas = Image.new("L", (w, h), 0)
    ImageDraw.Draw(canvas).polygon(pts, fill=255)
    return np.asarray(canvas) > 0


def make_scene(rng: np.random.Generator, size: int = 128, texture: str | None = None) -> SynthScene:
    h = w = size
    kind = texture or TEXTURES[int(rng.integers(len(TEXTURES)))]
    base = rng.uniform(0.4, 0.75, size=3)
    clean = np.clip(base * _texture(rng, kind, h, w)[..., None], 0.0, 1.0)
    # store 8-bit representable values so the ground truth survives PNG
    clean = to_uint8(clean) / 255.0

    mask = _polygon_mask(rng, h, w)
    factors = rng.uniform(0.2, 0.7, size=3)
    outside = manhattan_distance(mask).astype(np.float64)
    gain = np.ones((h, w, 3))
    gain[mask] = factors
    ramp = (outside > 0) & (outside <= RAMP_WIDTH)
    frac = (outside[ramp] / (RAMP_WIDTH + 1))[:, None]
    gain[ramp] = factors + (1.0 - factors) * frac
    image = to_uint8(clean * gain) / 255.0

    interior = np.flatnonzero(erode(mask, 4).ravel())
    n_in = len(interior)
    ring = None
    for width in range(4, size):
        cand = (outside >= 6) & (outside < 6 + width)
        ring = np.flatnonzero(cand.ravel())
        if len(ring) >= n_in:
            break
    annotation = RegionPairAnnotation(shape=(h, w), pairs=[(1, interior, ring)])
    return SynthScene(image, clean, mask, factors, kind, annotation)


def generate(out_dir: str | os.PathLike, seed: int = 0, count: int = 20, size: int = 128) -> list[str]:
    """Write ``count`` scenes under ``out_dir``.

    Layout: ``images/``, ``masks/``, ``clean/``, ``annotations/`` holding
    ``scene_NNNN.png`` each, plus ``factors.json``.  Identical seeds give
    byte-identical files.
    """
    out = Path(out_dir)
    for sub in ("images", "masks", "clean", "annotations"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    meta = {}
    names = []
    for k in range(count):
        scene = make_scene(rng, size)
        name = f"scene_{k:04d}.png"
        save_png(scene.image, out / "images" / name)
        save_mask(scene.mask, out / "masks" / name)
        save_png(scene.clean, out / "clean" / name)
        save_annotation(scene.annotation, out / "annotations" / name)
        meta[name] = {"factors": [round(float(f), 6) for f in scene.factors], "texture": scene.texture}
        names.append(name)
    with open(out / "factors.json", "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
    return names
