"""Penumbra band extraction and two-sided boundary smoothing.

Morphology uses the L1 (diamond) structuring element, implemented through
exact Manhattan distance transforms: a pixel survives dilation by ``r`` when
it lies within L1 distance ``r`` of the mask, and survives erosion when every
pixel within ``r`` (including off-image pixels, which count as lit) is
shadow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from umbra import kernels
from umbra.imagecore import DimensionError, as_mask

# floor for the gain denominator, one 8-bit step
MIN_LEVEL = 1.0 / 255.0


def manhattan_distance(target, backend=None) -> np.ndarray:
    """L1 distance to the nearest ``True`` pixel (``1 << 30`` if none)."""
    backend = backend or kernels
    return backend.manhattan_distance(np.ascontiguousarray(target, dtype=np.uint8))


def _check_radius(r):
    if r < 0:
        raise ValueError(f"radius must be >= 0, got {r}")


def dilate(mask, r: int, backend=None) -> np.ndarray:
    mask = as_mask(mask)
    _check_radius(r)
    if r == 0:
        return mask.copy()
    return manhattan_distance(mask, backend) <= r


def erode(mask, r: int, backend=None, frame_is_shadow: bool = False) -> np.ndarray:
    """Diamond erosion.  Off-image pixels count as lit unless
    ``frame_is_shadow``, in which case only real mask edges erode."""
    mask = as_mask(mask)
    _check_radius(r)
    if r == 0:
        return mask.copy()
    if frame_is_shadow:
        return manhattan_distance(~mask, backend) > r
    padded = np.pad(~mask, 1, constant_values=True)
    return manhattan_distance(padded, backend)[1:-1, 1:-1] > r


def morph(mask, r: int, op: str, backend=None) -> np.ndarray:
    if op == "dilate":
        return dilate(mask, r, backend)
    if op == "erode":
        return erode(mask, r, backend)
    raise ValueError(f"unknown morphology op {op!r}")


@dataclass
class PenumbraBand:
    band: np.ndarray
    radius: int
    dist_inner: np.ndarray
    dist_outer: np.ndarray
    mask: np.ndarray

    def blend_coefficient(self) -> np.ndarray:
        """Weight of the relit image per pixel: 1 toward the umbra, 0 outside.

        Only meaningful inside the band; elsewhere it is 1 in the core and 0
        beyond the dilated mask.
        """
        din = self.dist_inner.astype(np.float64)
        dout = self.dist_outer.astype(np.float64)
        t = np.where(dout > 0, dout / np.maximum(din + dout, 1.0), 0.0)
        return np.where(din == 0, 1.0, t)


def extract_penumbra(mask, r: int = 3, backend=None) -> PenumbraBand:
    """Band = dilate(mask, r) minus erode(mask, r), with distance fields.

    ``dist_inner`` measures L1 distance to the eroded core (to the mask
    itself when erosion leaves nothing); ``dist_outer`` measures distance to
    the pixels beyond the dilated mask (to the image exterior when the
    dilation covers everything).

    The band follows the border rule of :func:`erode`, so it also runs
    along the image frame where a shadow is cut off.  For the distance
    field the core is eroded only at real mask edges; band pixels on the
    frame then sit at ``dist_inner == 0`` and stay fully relit.
    """
    mask = as_mask(mask)
    _check_radius(r)
    dil = dilate(mask, r, backend)
    ero = erode(mask, r, backend)
    band = dil & ~ero

    core = erode(mask, r, backend, frame_is_shadow=True)
    if not core.any():
        core = mask
    dist_inner = manhattan_distance(core, backend)
    outside = ~dil
    if outside.any():
        dist_outer = manhattan_distance(outside, backend)
    else:
        dist_outer = manhattan_distance(np.pad(outside, 1, constant_values=True), backend)[1:-1, 1:-1]
    if not mask.any():
        dist_inner = np.zeros_like(dist_outer)
    return PenumbraBand(band=band, radius=r, dist_inner=dist_inner, dist_outer=dist_outer, mask=mask)


def _side_means(img, side, r):
    """Per-pixel mean of ``img`` over ``side`` pixels in a (2r+3)^2 window.

    The window reaches one pixel past the band, so the pixels the 3x3 pass
    reads from see both sides too.  Returns ``(mean, seen)``; ``seen`` is
    False where the window holds no ``side`` pixel.
    """
    size = 2 * r + 3
    w = ndimage.uniform_filter(side.astype(np.float64), size=size, mode="constant")
    sums = ndimage.uniform_filter(img * side[..., None], size=(size, size, 1), mode="constant")
    seen = w > 1e-12
    mean = sums / np.where(seen, w, 1.0)[..., None]
    return mean, seen


def smooth_boundary(original, relit, band: PenumbraBand) -> np.ndarray:
    """Two-sided blend of the relit interior and the lit exterior.

    Let ``A`` be the local mean of ``relit`` over nearby mask pixels, ``B``
    the local mean of ``original`` over nearby non-mask pixels (both over a
    (2r+3)^2 window) and ``R = A / B`` the level step across the mask edge.
    With ``t = d_out / (d_in + d_out)`` every band pixel becomes
    ``base * (1 + t * (R - 1))`` where ``base`` is ``relit / R`` inside the
    mask and ``original`` outside.  Mask pixels are thus pulled toward the
    exterior level by ``1 - t`` and lit pixels toward the interior level by
    ``t``, so the step becomes a ramp across the whole band.  When the
    original is unshadowed inside the band this is exactly
    ``t * relit + (1 - t) * original`` on the inner side.

    The factor ``1 + t * (R - 1)`` is continuous across the mask edge, so
    the single 3x3 mean pass runs on it (band pixels only; neighbours
    outside the band contribute their own factor).  Filtering the factor
    rather than pixel values leaves texture untouched.  Pixels outside the
    band, and band pixels on the image frame (``d_in == 0``), come from
    ``relit`` unchanged; so does everything when ``relit`` equals
    ``original`` on the band.
    """
    original = np.asarray(original, dtype=np.float64)
    relit = np.asarray(relit, dtype=np.float64)
    if original.shape != relit.shape:
        raise DimensionError("original and relit images differ in shape")
    if original.shape[:2] != band.band.shape:
        raise DimensionError("band and images differ in size")
    sel = band.band
    if band.radius <= 0 or not sel.any() or np.array_equal(original[sel], relit[sel]):
        return relit.copy()
    mask = band.mask
    squeeze = original.ndim == 2
    if squeeze:
        original, relit = original[..., None], relit[..., None]

    a, seen_a = _side_means(relit, mask, band.radius)
    b, seen_b = _side_means(original, ~mask, band.radius)
    both = (seen_a & seen_b)[..., None]
    step = np.where(both, np.maximum(a, MIN_LEVEL) / np.maximum(b, MIN_LEVEL), 1.0)

    t = band.blend_coefficient()[..., None]
    factor = 1.0 + t * (step - 1.0)
    factor = ndimage.uniform_filter(factor, size=(3, 3, 1), mode="nearest")
    base = np.where(mask[..., None], relit / step, original)

    # band pixels on the image frame (d_in == 0) keep the relit value
    sel = sel & (band.dist_inner > 0)
    out = relit.copy()
    out[sel] = np.clip(base[sel] * factor[sel], 0.0, 1.0)
    return out[..., 0] if squeeze else out
