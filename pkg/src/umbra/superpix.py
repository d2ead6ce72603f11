"""Mask-constrained SLIC segmentation and per-superpixel statistics.

SLIC runs separately inside the shadow and the lit region, so no superpixel
ever straddles the mask boundary.  Shadow superpixels take the low ids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from umbra import kernels
from umbra.imagecore import DimensionError, as_mask, as_rgb, check_same_size, rgb_to_lab

SHADOW_PROPORTION = 0.8
MIN_COMPONENT = 16

LAB_RANGES = ((0.0, 100.0), (-128.0, 128.0), (-128.0, 128.0))


@dataclass
class Superpixel:
    """Read-only view of one region of a :class:`SuperpixelMap`."""

    id: int
    shadow: bool
    pixel_coords: np.ndarray
    centroid: np.ndarray
    mean_rgb: np.ndarray | None = None
    mean_lab: np.ndarray | None = None
    lab_histograms: np.ndarray | None = None
    lbp_histogram: np.ndarray | None = None

    @property
    def mean_a(self) -> float:
        return float(self.mean_lab[1])


@dataclass
class SuperpixelMap:
    """Dense label raster plus per-region tables indexed by superpixel id.

    The statistics arrays stay ``None`` until :func:`compute_region_stats`
    has been run.
    """

    labels: np.ndarray
    shadow: np.ndarray
    counts: np.ndarray
    centroids: np.ndarray
    mean_rgb: np.ndarray | None = None
    mean_lab: np.ndarray | None = None
    lab_hist: np.ndarray | None = None
    lbp_hist: np.ndarray | None = None
    usable: np.ndarray | None = None
    _order: np.ndarray | None = field(default=None, repr=False)
    _starts: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_regions(self) -> int:
        return len(self.counts)

    @property
    def shadow_ids(self) -> np.ndarray:
        return np.flatnonzero(self.shadow)

    @property
    def nonshadow_ids(self) -> np.ndarray:
        return np.flatnonzero(~self.shadow)

    @property
    def reference_ids(self) -> np.ndarray:
        """Lit superpixels eligible as illumination references."""
        if self.usable is None:
            return self.nonshadow_ids
        return np.flatnonzero(~self.shadow & self.usable)

    def pixel_index(self, i: int) -> np.ndarray:
        """Flat (raster) indices of the pixels in superpixel ``i``, ascending."""
        if self._order is None:
            flat = self.labels.ravel()
            self._order = np.argsort(flat, kind="stable")
            self._starts = np.concatenate([[0], np.cumsum(self.counts)])
        return self._order[self._starts[i] : self._starts[i + 1]]

    def region(self, i: int) -> Superpixel:
        idx = self.pixel_index(i)
        coords = np.column_stack(np.unravel_index(idx, self.labels.shape))

        def pick(arr):
            return None if arr is None else arr[i]

        return Superpixel(
            id=int(i),
            shadow=bool(self.shadow[i]),
            pixel_coords=coords,
            centroid=self.centroids[i],
            mean_rgb=pick(self.mean_rgb),
            mean_lab=pick(self.mean_lab),
            lab_histograms=pick(self.lab_hist),
            lbp_histogram=pick(self.lbp_hist),
        )

    def __len__(self):
        return self.n_regions

    def __iter__(self):
        return (self.region(i) for i in range(self.n_regions))

    def to_lines(self) -> list[str]:
        """Line-delimited dump: id, class, centroid row/col, mean RGB/Lab."""
        lines = []
        for i in range(self.n_regions):
            parts = [
                str(i),
                "shadow" if self.shadow[i] else "nonshadow",
                f"{self.centroids[i, 0]:.3f}",
                f"{self.centroids[i, 1]:.3f}",
                str(int(self.counts[i])),
            ]
            if self.mean_rgb is not None:
                parts += [f"{v:.5f}" for v in self.mean_rgb[i]]
                parts += [f"{v:.4f}" for v in self.mean_lab[i]]
            lines.append("\t".join(parts))
        return lines


def _grid_seeds(region: np.ndarray, k: int) -> np.ndarray:
    """Place ``k`` seeds on a near-regular grid over the region's pixels.

    The bounding box is cut into ``ny x nx`` cells, choosing the smallest
    grid whose occupied cell count reaches ``k`` (squarest cells breaking
    ties).  Excess cells with the fewest region pixels are dropped.  Each
    seed is the region pixel closest to its cell's pixel centroid.
    """
    ys, xs = np.nonzero(region)
    y0, x0 = ys.min(), xs.min()
    h = int(ys.max() - y0 + 1)
    w = int(xs.max() - x0 + 1)
    ry = ys - y0
    rx = xs - x0

    def occupancy(ny, nx):
        cell = (ry * ny // h) * nx + (rx * nx // w)
        return cell, np.bincount(cell, minlength=ny * nx)

    ideal = math.sqrt(k * h / w)
    best = None
    for ny in range(max(1, int(ideal) - 2), min(h, math.ceil(ideal) + 2) + 1):
        lo, hi = max(1, math.ceil(k / ny)), w
        if np.count_nonzero(occupancy(ny, hi)[1]) < k:
            continue
        while lo < hi:
            mid = (lo + hi) // 2
            if np.count_nonzero(occupancy(ny, mid)[1]) >= k:
                hi = mid
            else:
                lo = mid + 1
        nx = lo
        occupied = np.count_nonzero(occupancy(ny, nx)[1])
        aspect = abs(math.log((h / ny) / (w / nx)))
        key = (occupied - k, round(aspect, 9), ny)
        if best is None or key < best[0]:
            best = (key, ny, nx)
    if best is None:
        # cannot reach k cells (sparse, scattered region): one seed per pixel-rich cell
        ny = min(h, max(1, round(ideal)))
        nx = w
    else:
        _, ny, nx = best

    cell, counts = occupancy(ny, nx)
    occupied = np.flatnonzero(counts)
    if len(occupied) > k:
        keep = occupied[np.argsort(-counts[occupied], kind="stable")[:k]]
        occupied = np.sort(keep)

    sum_y = np.bincount(cell, weights=ys, minlength=ny * nx)
    sum_x = np.bincount(cell, weights=xs, minlength=ny * nx)
    seeds = np.empty((len(occupied), 2), dtype=np.int64)
    order = np.argsort(cell, kind="stable")
    starts = np.concatenate([[0], np.cumsum(counts)])
    for j, c in enumerate(occupied):
        members = order[starts[c] : starts[c + 1]]
        my, mx = sum_y[c] / counts[c], sum_x[c] / counts[c]
        d = (ys[members] - my) ** 2 + (xs[members] - mx) ** 2
        pick = members[np.argmin(d)]
        seeds[j] = ys[pick], xs[pick]
    return seeds


def _slic_region(lab, region, target_size, compactness, n_iter, backend):
    n = int(np.count_nonzero(region))
    k = math.ceil(n / target_size)
    seeds = _grid_seeds(region, k)
    k = len(seeds)
    centers = np.empty((k, 5))
    centers[:, :3] = lab[seeds[:, 0], seeds[:, 1]]
    centers[:, 3:] = seeds

    step = math.sqrt(target_size)
    spatial_w2 = compactness**2 / target_size
    ys, xs = np.nonzero(region)
    extent = max(ys.max() - ys.min() + 1, xs.max() - xs.min() + 1)
    radius = int(math.ceil(min(max(step, math.sqrt(n / k)), extent)))

    h, w = region.shape
    labels = np.full((h, w), -1, dtype=np.int32)
    dist = np.full((h, w), np.inf)
    region_u8 = np.ascontiguousarray(region, dtype=np.uint8)
    pix_lab = lab[ys, xs]

    for _ in range(n_iter):
        backend.slic_assign(lab, region_u8, centers, radius, spatial_w2, labels, dist)
        lab_ids = labels[ys, xs]
        missing = np.flatnonzero(lab_ids < 0)
        if len(missing):
            lab_ids[missing] = _nearest_center(
                pix_lab[missing], ys[missing], xs[missing], centers, spatial_w2
            )
            labels[ys[missing], xs[missing]] = lab_ids[missing]
        cnt = np.bincount(lab_ids, minlength=k).astype(float)
        live = cnt > 0
        for c, vals in enumerate((pix_lab[:, 0], pix_lab[:, 1], pix_lab[:, 2], ys, xs)):
            s = np.bincount(lab_ids, weights=vals, minlength=k)
            centers[live, c] = s[live] / cnt[live]
    return labels


def _nearest_center(pix_lab, ys, xs, centers, spatial_w2, chunk=4096):
    out = np.empty(len(ys), dtype=np.int32)
    for s in range(0, len(ys), chunk):
        e = s + chunk
        dl = pix_lab[s:e, None, :] - centers[None, :, :3]
        dy = ys[s:e, None] - centers[None, :, 3]
        dx = xs[s:e, None] - centers[None, :, 4]
        d = (dl[..., 0] ** 2 + dl[..., 1] ** 2 + dl[..., 2] ** 2) + (dy * dy + dx * dx) * spatial_w2
        out[s:e] = np.argmin(d, axis=1)
    return out


def _enforce_connectivity(labels, mask, lab, min_size, backend):
    """Split disconnected labels and fold small fragments into neighbours.

    A fragment below ``min_size`` joins the 4-adjacent component of the same
    region with the nearest mean Lab colour (lowest id on ties).  Fragments
    with no same-region neighbour stay on their own.
    """
    comp = backend.equal_components(np.ascontiguousarray(labels, dtype=np.int32))
    comp = comp.astype(np.int64)
    n = int(comp.max()) + 1
    flat = comp.ravel()
    size = np.bincount(flat, minlength=n).astype(float)
    sums = np.stack(
        [np.bincount(flat, weights=lab[..., c].ravel(), minlength=n) for c in range(3)], axis=1
    )
    first = np.full(n, flat.size)
    np.minimum.at(first, flat, np.arange(flat.size))
    comp_shadow = mask.ravel()[first]

    if not np.any(size < min_size):
        return comp

    pairs = []
    for a, b in ((comp[:, :-1], comp[:, 1:]), (comp[:-1, :], comp[1:, :])):
        diff = a != b
        pairs.append(np.stack([a[diff], b[diff]], axis=1))
    pairs = np.concatenate(pairs)
    pairs = pairs[comp_shadow[pairs[:, 0]] == comp_shadow[pairs[:, 1]]]
    code = np.unique(np.concatenate([pairs[:, 0] * n + pairs[:, 1], pairs[:, 1] * n + pairs[:, 0]]))
    src, dst = code // n, code % n
    indptr = np.concatenate([[0], np.cumsum(np.bincount(src, minlength=n))])
    roots = backend.merge_fragments(
        indptr.astype(np.int64),
        dst.astype(np.int64),
        size,
        np.ascontiguousarray(sums),
        float(min_size),
    )
    return roots[comp]


def slic_masked(
    img,
    mask,
    target_size: int = 600,
    compactness: float = 10.0,
    n_iter: int = 10,
    lab: np.ndarray | None = None,
    backend=None,
) -> SuperpixelMap:
    """Segment shadow and lit regions independently with SLIC.

    Each region gets ``ceil(region_pixels / target_size)`` grid seeds; the
    assignment step never crosses the mask.  Returns a :class:`SuperpixelMap`
    with classes assigned and no statistics.
    """
    img = as_rgb(img)
    mask = as_mask(mask)
    check_same_size(img, mask)
    if target_size < 16:
        raise ValueError(f"target_size must be >= 16, got {target_size}")
    backend = backend or kernels
    if lab is None:
        lab = rgb_to_lab(img)
    lab = np.ascontiguousarray(lab, dtype=np.float64)

    h, w = mask.shape
    labels = np.full((h, w), -1, dtype=np.int64)
    offset = 0
    for region in (mask, ~mask):
        if not region.any():
            continue
        sub = _slic_region(lab, region, target_size, compactness, n_iter, backend)
        labels[region] = sub[region] + offset
        offset += int(sub[region].max()) + 1

    merged = _enforce_connectivity(labels, mask, lab, target_size / 4.0, backend)
    _collapse_tiny_components(merged, mask)
    return _build_map(merged, mask)


def _collapse_tiny_components(labels, mask) -> None:
    """Give every mask component under ``MIN_COMPONENT`` pixels one label."""
    for region in (mask, ~mask):
        comp, n = ndimage.label(region)
        if n == 0:
            continue
        flat = comp.ravel()
        sizes = np.bincount(flat, minlength=n + 1)
        tiny = sizes < MIN_COMPONENT
        tiny[0] = False
        sel = tiny[flat]
        if not sel.any():
            continue
        # first pixel (raster order) of each component carries its label
        first = np.full(n + 1, -1, dtype=np.int64)
        idx = np.flatnonzero(sel)[::-1]
        first[flat[idx]] = idx
        out = labels.reshape(-1)
        out[sel] = out[first[flat[sel]]]


def _build_map(raw_labels, mask) -> SuperpixelMap:
    """Relabel densely (shadow first, then raster order) and classify."""
    flat = raw_labels.ravel()
    uniq, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    shadow_first = mask.ravel()[first]
    order = np.lexsort((first, ~shadow_first))
    rank = np.empty(len(uniq), dtype=np.int32)
    rank[order] = np.arange(len(uniq), dtype=np.int32)
    labels = rank[inverse].reshape(raw_labels.shape)
    spmap = _from_labels(labels)
    return classify_superpixels(spmap, mask)


def _from_labels(labels) -> SuperpixelMap:
    labels = np.asarray(labels, dtype=np.int32)
    flat = labels.ravel()
    k = int(flat.max()) + 1
    counts = np.bincount(flat, minlength=k)
    if np.any(counts == 0):
        raise ValueError("superpixel labels must be dense (every id in 0..K-1 used)")
    rows, cols = np.indices(labels.shape)
    centroids = np.column_stack(
        [
            np.bincount(flat, weights=rows.ravel(), minlength=k) / counts,
            np.bincount(flat, weights=cols.ravel(), minlength=k) / counts,
        ]
    )
    return SuperpixelMap(
        labels=labels, shadow=np.zeros(k, dtype=bool), counts=counts, centroids=centroids
    )


def from_labels(labels, mask) -> SuperpixelMap:
    """Wrap an externally produced dense label raster and classify it."""
    mask = as_mask(mask)
    if np.shape(labels) != mask.shape:
        raise DimensionError("label raster and mask differ in size")
    return classify_superpixels(_from_labels(labels), mask)


def classify_superpixels(spmap: SuperpixelMap, mask) -> SuperpixelMap:
    """Mark a superpixel as shadow when more than 80% of its pixels are."""
    mask = as_mask(mask)
    if spmap.labels.shape != mask.shape:
        raise DimensionError("superpixel map and mask differ in size")
    shadow_px = np.bincount(
        spmap.labels.ravel(), weights=mask.ravel().astype(float), minlength=spmap.n_regions
    )
    spmap.shadow = shadow_px / spmap.counts > SHADOW_PROPORTION
    return spmap


def _normalized_hist(flat_labels, bins, k, n_bins):
    h = np.bincount(flat_labels * n_bins + bins, minlength=k * n_bins).reshape(k, n_bins)
    return h / h.sum(axis=1, keepdims=True)


def lab_bin_index(values, channel, n_bins):
    lo, hi = LAB_RANGES[channel]
    idx = np.floor((values - lo) / (hi - lo) * n_bins).astype(np.int64)
    return np.clip(idx, 0, n_bins - 1)


def lab_bin_centers(channel, n_bins):
    lo, hi = LAB_RANGES[channel]
    width = (hi - lo) / n_bins
    return lo + width * (np.arange(n_bins) + 0.5)


def compute_region_stats(
    img_rgb, img_lab, lbp, spmap: SuperpixelMap, lab_bins: int = 32, lbp_bins: int = 256
) -> SuperpixelMap:
    """Fill means and normalized Lab / LBP histograms for every superpixel.

    ``lbp`` holds integer codes 0..255 (or the ``code / 255`` float form).
    Lab histograms use ``lab_bins`` uniform bins over L in [0, 100] and a, b
    in [-128, 128]; LBP codes are grouped into ``lbp_bins`` equal bins.
    """
    img_rgb = as_rgb(img_rgb)
    img_lab = as_rgb(img_lab)
    if img_rgb.shape[:2] != spmap.labels.shape or img_lab.shape[:2] != spmap.labels.shape:
        raise DimensionError("statistics inputs differ in size from the label map")
    if 256 % lbp_bins:
        raise ValueError("lbp_bins must divide 256")
    lbp = np.asarray(lbp)
    if lbp.dtype.kind == "f":
        lbp = np.rint(lbp * 255.0)
    codes = lbp.astype(np.int64).ravel()

    flat = spmap.labels.ravel().astype(np.int64)
    k = spmap.n_regions
    counts = spmap.counts.astype(float)
    if np.any(counts == 0):
        raise AssertionError("empty superpixel in label map")

    rgb = img_rgb.reshape(-1, 3)
    lab = img_lab.reshape(-1, 3)
    spmap.mean_rgb = np.stack(
        [np.bincount(flat, weights=rgb[:, c], minlength=k) / counts for c in range(3)], axis=1
    )
    spmap.mean_lab = np.stack(
        [np.bincount(flat, weights=lab[:, c], minlength=k) / counts for c in range(3)], axis=1
    )
    spmap.lab_hist = np.stack(
        [_normalized_hist(flat, lab_bin_index(lab[:, c], c, lab_bins), k, lab_bins) for c in range(3)],
        axis=1,
    )
    spmap.lbp_hist = _normalized_hist(flat, codes * lbp_bins // 256, k, lbp_bins)
    return spmap


def label_image(spmap: SuperpixelMap, seed: int = 0) -> np.ndarray:
    """Random-colour RGB rendering of the label map, for debugging."""
    colours = np.random.default_rng(seed).random((spmap.n_regions, 3))
    return colours[spmap.labels]
