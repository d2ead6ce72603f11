"""Raster helpers: color-space conversions, PNG I/O and mask handling.

Images are ``float64`` arrays of shape ``(H, W, 3)`` (or ``(H, W)`` for a
single channel) holding normalized intensities in ``[0, 1]``.  Shadow masks
are boolean ``(H, W)`` arrays, ``True`` marking shadow.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image


class DimensionError(ValueError):
    """Raised when array shapes disagree or a channel count is unsupported."""


# sRGB (IEC 61966-2-1) primaries, D65 white
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65_WHITE = np.array([0.95047, 1.0, 1.08883])
_LAB_EPS = 216.0 / 24389.0
_LAB_KAPPA = 24389.0 / 27.0

GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])


def as_rgb(img) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionError(f"expected an (H, W, 3) RGB image, got shape {img.shape}")
    return img


def as_mask(mask) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise DimensionError(f"expected an (H, W) mask, got shape {mask.shape}")
    if mask.dtype != bool:
        mask = mask != 0
    return mask


def check_same_size(img: np.ndarray, mask: np.ndarray) -> None:
    if img.shape[:2] != mask.shape[:2]:
        raise DimensionError(
            f"image is {img.shape[1]}x{img.shape[0]} but mask is {mask.shape[1]}x{mask.shape[0]}"
        )


def srgb_to_linear(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def rgb_to_lab(img) -> np.ndarray:
    """Convert gamma-encoded sRGB in ``[0, 1]`` to CIE L*a*b* (D65).

    Channels are returned in their native ranges: L in ``[0, 100]`` and a, b
    roughly in ``[-128, 127]``.
    """
    rgb = as_rgb(img)
    lin = srgb_to_linear(np.clip(rgb, 0.0, None))
    xyz = lin @ _RGB_TO_XYZ.T
    xyz = xyz / _D65_WHITE
    f = np.where(xyz > _LAB_EPS, np.cbrt(xyz), (_LAB_KAPPA * xyz + 16.0) / 116.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def rgb_to_hsv(img) -> np.ndarray:
    """Hexcone HSV with all three channels in ``[0, 1]``; hue wraps at 1."""
    rgb = as_rgb(img)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    c = v - rgb.min(axis=-1)
    safe_c = np.where(c > 0, c, 1.0)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)

    h = np.zeros_like(v)
    rmax = (v == r) & (c > 0)
    gmax = (v == g) & (c > 0) & ~rmax
    bmax = (c > 0) & ~rmax & ~gmax
    h = np.where(rmax, ((g - b) / safe_c) % 6.0, h)
    h = np.where(gmax, (b - r) / safe_c + 2.0, h)
    h = np.where(bmax, (r - g) / safe_c + 4.0, h)
    h = (h / 6.0) % 1.0
    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(img) -> np.ndarray:
    hsv = as_rgb(img)
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    h6 = (h % 1.0) * 6.0
    sector = np.floor(h6).astype(int) % 6
    frac = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * frac)
    t = v * (1.0 - s * (1.0 - frac))
    choices_r = [v, q, p, p, t, v]
    choices_g = [t, v, v, q, p, p]
    choices_b = [p, p, t, v, v, q]
    out = np.stack(
        [
            np.choose(sector, choices_r),
            np.choose(sector, choices_g),
            np.choose(sector, choices_b),
        ],
        axis=-1,
    )
    return out


def rgb_to_gray(img) -> np.ndarray:
    """Rec. 601 luma, ``0.299 R + 0.587 G + 0.114 B``."""
    rgb = as_rgb(img)
    return rgb @ GRAY_WEIGHTS


def load_png(path: str | os.PathLike) -> np.ndarray:
    """Read an 8-bit RGB or grayscale PNG as floats in ``[0, 1]``.

    Grayscale files come back as ``(H, W)``; RGBA is not accepted, nor are
    palette or 16-bit images.
    """
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                arr = np.asarray(im, dtype=np.uint8)
            elif mode == "RGB":
                arr = np.asarray(im, dtype=np.uint8)
            else:
                raise ValueError(f"{path}: unsupported PNG mode {mode!r} (need 8-bit RGB or gray)")
    except (OSError, SyntaxError) as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc
    return arr.astype(np.float64) / 255.0


def to_uint8(img: np.ndarray) -> np.ndarray:
    # round half up, not numpy's half-to-even
    return np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def save_png(img, path: str | os.PathLike) -> None:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[..., 0]
    if img.ndim not in (2, 3) or (img.ndim == 3 and img.shape[2] != 3):
        raise DimensionError(f"cannot save array of shape {img.shape} as PNG")
    Image.fromarray(to_uint8(img)).save(path, format="PNG")


def load_mask(path: str | os.PathLike) -> np.ndarray:
    """Read a mask PNG; any value >= 128 (first channel for RGB) is shadow."""
    arr = load_png(path)
    if arr.ndim == 3:
        arr = arr[..., 0]
    return np.rint(arr * 255.0) >= 128


def save_mask(mask, path: str | os.PathLike) -> None:
    mask = as_mask(mask)
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8)).save(path, format="PNG")
