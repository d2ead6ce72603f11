"""Neighbour-guided illumination transfer for shadow superpixels.

Every shadow superpixel is relit by ``(r + 1) * I`` where ``r`` is a
per-channel direct-to-ambient ratio estimated from nearby lit superpixels::

    r_i = (mean_lit_i - mean_shadow) / mean_shadow
    r   = sum_i w_i * r_i            (w normalized to sum 1 by default)

The weights ``w_i`` come from :mod:`umbra.features`.  When every nearby
candidate looks like a different material (all raw weights below
``fallback_threshold``) the search widens to every lit superpixel in the
image and keeps the ``fallback_top_k`` most similar.

Each superpixel reads only statistics of the original image, so results do
not depend on processing order.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from umbra.features import FeatureTable, WeightParams, lbp_codes
from umbra.imagecore import as_mask, as_rgb, check_same_size, rgb_to_gray, rgb_to_lab
from umbra.penumbra import dilate, extract_penumbra, smooth_boundary
from umbra.superpix import Superpixel, SuperpixelMap, compute_region_stats, slic_masked

logger = logging.getLogger(__name__)

MIN_DENOMINATOR = 1.0 / 255.0


class NoReferenceError(RuntimeError):
    """No lit superpixel exists to draw illumination from."""


@dataclass
class RelightConfig:
    n_neighbors: int = 7
    alpha: float = 0.6
    beta: float = 0.3
    gamma: float = 0.1
    epsilon: float = 1e-4
    fallback_threshold: float = 0.2
    fallback_top_k: int = 7
    fallback_mode: str = "weighted"
    normalize_weights: bool = True
    superpixel_size: int = 600
    reference_margin: int = 3
    compactness: float = 10.0
    slic_iterations: int = 10
    lab_bins: int = 32
    lbp_bins: int = 256

    def __post_init__(self):
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        if self.fallback_top_k < 1:
            raise ValueError("fallback_top_k must be >= 1")
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("alpha, beta and gamma must be non-negative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.fallback_threshold <= 0:
            raise ValueError("fallback_threshold must be positive")
        if self.fallback_mode not in ("weighted", "naive"):
            raise ValueError("fallback_mode must be 'weighted' or 'naive'")
        if self.reference_margin < 0:
            raise ValueError("reference_margin must be >= 0")
        if self.superpixel_size < 16:
            raise ValueError("superpixel_size must be >= 16")
        if self.slic_iterations < 1 or self.lab_bins < 2:
            raise ValueError("slic_iterations must be >= 1 and lab_bins >= 2")
        if self.lbp_bins < 1 or 256 % self.lbp_bins:
            raise ValueError("lbp_bins must divide 256")

    @property
    def weight_params(self) -> WeightParams:
        return WeightParams(self.alpha, self.beta, self.gamma, self.epsilon)


@dataclass
class RegionRecord:
    superpixel: int
    references: list[int]
    weights: list[float]
    ratio: np.ndarray
    fallback_used: bool

    def to_line(self) -> str:
        refs = ",".join(str(r) for r in self.references)
        ws = ",".join(f"{w:.6g}" for w in self.weights)
        ratio = ",".join(f"{v:.6f}" for v in self.ratio)
        return f"{self.superpixel}\t{int(self.fallback_used)}\t{ratio}\t{refs}\t{ws}"


@dataclass
class RelightReport:
    records: list[RegionRecord] = field(default_factory=list)
    duration: float = 0.0
    global_ratio: np.ndarray | None = None
    diagnostic: str = ""

    @property
    def n_fallback(self) -> int:
        return sum(r.fallback_used for r in self.records)

    def to_lines(self) -> list[str]:
        head = [
            f"# shadow_superpixels={len(self.records)} fallback={self.n_fallback} "
            f"duration={self.duration:.4f}s"
        ]
        if self.diagnostic:
            head.append(f"# {self.diagnostic}")
        head.append("# superpixel\tfallback\tratio_rgb\treferences\tweights")
        return head + [r.to_line() for r in self.records]


def nearest_nonshadow(spmap: SuperpixelMap, sp: Superpixel | int, n: int) -> list[int]:
    """Ids of the ``n`` lit superpixels with the closest centroids.

    Ties go to the lower id.  Raises :class:`NoReferenceError` when the map
    has no lit superpixel.
    """
    i = sp.id if isinstance(sp, Superpixel) else int(sp)
    lit = spmap.reference_ids
    if len(lit) == 0:
        raise NoReferenceError("image has no non-shadow superpixels")
    d = np.sum((spmap.centroids[lit] - spmap.centroids[i]) ** 2, axis=1)
    order = np.argsort(d, kind="stable")[:n]
    return lit[order].tolist()


def superpixel_ratio(sp_s: Superpixel, sp_ns: Superpixel) -> np.ndarray:
    return _ratio(np.asarray(sp_s.mean_rgb), np.asarray(sp_ns.mean_rgb))


def _ratio(mean_s, mean_ns):
    denom = np.maximum(mean_s, MIN_DENOMINATOR)
    return (mean_ns - mean_s) / denom


def aggregate_ratio(ratios, weights, normalize: bool = True) -> np.ndarray:
    ratios = np.asarray(ratios, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if ratios.ndim != 2 or len(ratios) != len(weights) or len(weights) == 0:
        raise ValueError("need one weight per ratio and at least one ratio")
    if normalize:
        weights = weights / weights.sum()
    return weights @ ratios


def relight_superpixel(img: np.ndarray, pixel_index: np.ndarray, ratio) -> None:
    """Scale one superpixel's pixels by ``ratio + 1`` in place, clamped to [0, 1]."""
    ratio = np.asarray(ratio, dtype=np.float64)
    if not np.all(np.isfinite(ratio)):
        raise ValueError("relight ratio must be finite")
    flat = img.reshape(-1, img.shape[-1])
    flat[pixel_index] = np.clip(flat[pixel_index] * (ratio + 1.0), 0.0, 1.0)


def select_references(
    spmap: SuperpixelMap, sp: Superpixel | int, cfg: RelightConfig, table: FeatureTable
):
    """Choose reference superpixels and their raw weights.

    Returns ``(refs, weights, fallback_used)``.  Local candidates are the
    ``n_neighbors`` nearest lit superpixels.  If none reaches
    ``fallback_threshold`` the whole image is searched.
    """
    i = sp.id if isinstance(sp, Superpixel) else int(sp)
    local = np.asarray(nearest_nonshadow(spmap, i, cfg.n_neighbors))
    w_local = table.weights(i, local)
    if w_local.max() >= cfg.fallback_threshold:
        return local.tolist(), w_local.tolist(), False

    lit = spmap.reference_ids
    if cfg.fallback_mode == "naive":
        return lit.tolist(), np.ones(len(lit)).tolist(), True
    w_all = table.weights(i, lit)
    top = np.argsort(-w_all, kind="stable")[: cfg.fallback_top_k]
    return lit[top].tolist(), w_all[top].tolist(), True


def _estimate(i, spmap, cfg, table):
    refs, weights, fallback = select_references(spmap, i, cfg, table)
    ratios = _ratio(spmap.mean_rgb[i], spmap.mean_rgb[refs])
    r = aggregate_ratio(ratios, weights, cfg.normalize_weights)
    return RegionRecord(i, refs, weights, r, fallback)


def global_ratio(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per-channel ratio from the mean lit pixel vs the mean shadow pixel."""
    return _ratio(img[mask].mean(axis=0), img[~mask].mean(axis=0))


def prepare(img, mask, cfg: RelightConfig) -> SuperpixelMap:
    """Segment and compute per-superpixel statistics.

    Means in RGB come from the original pixels.  Lab and LBP features of
    shadow pixels come from a copy pre-lit with the global ratio, so they
    are comparable with lit candidates.
    """
    spmap = slic_masked(
        img, mask, cfg.superpixel_size, cfg.compactness, cfg.slic_iterations
    )
    working = img.copy()
    if mask.any() and (~mask).any():
        working[mask] = np.clip(img[mask] * (global_ratio(img, mask) + 1.0), 0.0, 1.0)
    lab = rgb_to_lab(working)
    codes = lbp_codes(rgb_to_gray(working))
    compute_region_stats(img, lab, codes, spmap, cfg.lab_bins, cfg.lbp_bins)
    exclude_penumbra_margin(img, mask, spmap, cfg.reference_margin)
    return spmap


def exclude_penumbra_margin(img, mask, spmap: SuperpixelMap, margin: int) -> None:
    """Drop lit pixels within ``margin`` of the mask from reference means.

    Those pixels sit in the penumbra and are only partly lit.  Lit
    superpixels lying wholly inside the margin are marked unusable as
    references, unless that would leave no reference at all.
    """
    if margin <= 0 or not mask.any():
        return
    means = spmap.mean_rgb.copy()
    near = dilate(mask, margin) & ~mask
    keep = ~near.ravel()
    flat = spmap.labels.ravel()
    k = spmap.n_regions
    cnt = np.bincount(flat[keep], minlength=k).astype(float)
    rgb = img.reshape(-1, 3)[keep]
    usable = (cnt > 0) & ~spmap.shadow
    for c in range(3):
        s = np.bincount(flat[keep], weights=rgb[:, c], minlength=k)
        means[usable, c] = s[usable] / cnt[usable]
    spmap.mean_rgb = means
    if usable.any():
        spmap.usable = usable | spmap.shadow


def relight_shadows(
    img,
    mask,
    cfg: RelightConfig | None = None,
    *,
    threads: int = 1,
    shuffle_seed: int | None = None,
    spmap: SuperpixelMap | None = None,
):
    """Relight every shadow superpixel; no boundary smoothing.

    Returns ``(relit, report, spmap)``.  ``shuffle_seed`` permutes the order
    in which superpixels are processed (the output does not change).
    """
    cfg = cfg or RelightConfig()
    img = as_rgb(img)
    mask = as_mask(mask)
    check_same_size(img, mask)
    t0 = time.perf_counter()
    report = RelightReport()
    out = img.copy()

    if not mask.any():
        report.duration = time.perf_counter() - t0
        return out, report, spmap
    if mask.all():
        report.diagnostic = "mask covers the whole image; no lit reference available"
        logger.warning(report.diagnostic)
        report.duration = time.perf_counter() - t0
        return out, report, spmap

    report.global_ratio = global_ratio(img, mask)
    if spmap is None:
        spmap = prepare(img, mask, cfg)
    table = FeatureTable(spmap, cfg.weight_params)

    ids = spmap.shadow_ids
    if shuffle_seed is not None:
        ids = np.random.default_rng(shuffle_seed).permutation(ids)

    def work(i):
        rec = _estimate(int(i), spmap, cfg, table)
        relight_superpixel(out, spmap.pixel_index(rec.superpixel), rec.ratio)
        return rec

    spmap.pixel_index(0)  # build the index before threads share it
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(work, ids))
    else:
        records = [work(i) for i in ids]
    report.records = sorted(records, key=lambda r: r.superpixel)
    report.duration = time.perf_counter() - t0
    return out, report, spmap


def remove_shadows(
    img,
    mask,
    cfg: RelightConfig | None = None,
    *,
    penumbra_radius: int = 3,
    smoothing: bool = True,
    threads: int = 1,
    shuffle_seed: int | None = None,
):
    """Full removal: segmentation, relighting and penumbra smoothing.

    Returns ``(result, report)``.  With an empty mask the result equals the
    input exactly.
    """
    t0 = time.perf_counter()
    img = as_rgb(img)
    mask = as_mask(mask)
    relit, report, _ = relight_shadows(
        img, mask, cfg, threads=threads, shuffle_seed=shuffle_seed
    )
    if smoothing and report.records and penumbra_radius > 0:
        relit = smooth_boundary(img, relit, extract_penumbra(mask, penumbra_radius))
    report.duration = time.perf_counter() - t0
    return relit, report
