"""HSV threshold shadow detector.

A lightweight stand-in so ``umbra remove --auto-detect`` works without a
learned detector.  Benchmarks should use supplied masks instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from umbra.imagecore import as_rgb, rgb_to_hsv


@dataclass
class DetectConfig:
    value_percentile: float = 0.3
    sat_min: float = 0.15
    min_component: int = 25

    def __post_init__(self):
        if not 0.0 < self.value_percentile < 1.0:
            raise ValueError("value_percentile must lie in (0, 1)")
        if self.min_component < 0:
            raise ValueError("min_component must be >= 0")


def candidate_pixels(img, cfg: DetectConfig) -> np.ndarray:
    """Dark pixels before component filtering and closing."""
    hsv = rgb_to_hsv(as_rgb(img))
    s, v = hsv[..., 1], hsv[..., 2]
    q = np.quantile(v, cfg.value_percentile)
    return (v < q) & ((s >= cfg.sat_min) | (v < q / 2))


def detect_shadows(img, cfg: DetectConfig | None = None) -> np.ndarray:
    """Pixel is shadow iff V is strictly below the image's V quantile and it
    is either saturated enough or very dark (below half the quantile).

    Components smaller than ``min_component`` pixels (8-connected) are
    dropped, then a 3x3 closing fills pinholes.
    """
    cfg = cfg or DetectConfig()
    cand = candidate_pixels(img, cfg)
    if cfg.min_component > 1 and cand.any():
        lab, n = ndimage.label(cand, structure=np.ones((3, 3), bool))
        sizes = np.bincount(lab.ravel(), minlength=n + 1)
        keep = sizes >= cfg.min_component
        keep[0] = False
        cand = keep[lab]
    # edge padding keeps the closing from eating shadows at the border
    padded = np.pad(cand, 1, mode="edge")
    closed = ndimage.binary_closing(padded, structure=np.ones((3, 3), bool))
    return closed[1:-1, 1:-1]
