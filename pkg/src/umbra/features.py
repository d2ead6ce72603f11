"""Similarity measures between a shadow superpixel and a lit candidate.

Three distances are combined into one contribution weight::

    weight = 1 / (alpha * d_emd + beta * d_lbp + gamma * d_amean + eps)

``d_emd`` sums per-channel 1-D Wasserstein distances of the Lab
histograms and divides by 300; ``d_lbp`` is one minus the Bhattacharyya
coefficient of the LBP histograms; ``d_amean`` is the absolute gap between
mean a* values divided by 128.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from umbra import kernels
from umbra.imagecore import DimensionError
from umbra.superpix import Superpixel, lab_bin_centers

EMD_NORMALIZER = 300.0
A_NORMALIZER = 128.0


@dataclass(frozen=True)
class WeightParams:
    alpha: float = 0.6
    beta: float = 0.3
    gamma: float = 0.1
    epsilon: float = 1e-4


@dataclass(frozen=True)
class SimilarityBreakdown:
    d_emd: float
    d_lbp: float
    d_amean: float
    weight: float

    def to_line(self, ref_id: int | None = None) -> str:
        head = [] if ref_id is None else [str(ref_id)]
        vals = [f"{v:.6g}" for v in (self.d_emd, self.d_lbp, self.d_amean, self.weight)]
        return "\t".join(head + vals)


def lbp_codes(gray, backend=None) -> np.ndarray:
    """Integer LBP codes (``uint8``) of a single-channel image."""
    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim == 3 and gray.shape[2] == 1:
        gray = gray[..., 0]
    if gray.ndim != 2:
        raise DimensionError(f"LBP needs a single-channel image, got shape {gray.shape}")
    backend = backend or kernels
    return backend.lbp_codes(np.ascontiguousarray(gray))


def lbp_map(gray, backend=None) -> np.ndarray:
    """LBP codes as an image buffer, ``code / 255``."""
    return lbp_codes(gray, backend) / 255.0


def wasserstein_1d(p, q, bin_values) -> float:
    """Earth mover's distance between two histograms on a shared 1-D grid.

    Computed as the area between the two CDFs.

    Raises
    ------
    ValueError
        If shapes disagree, ``bin_values`` is not ascending, or either
        histogram does not sum to one within 1e-6.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(bin_values, dtype=np.float64)
    if p.shape != q.shape or p.shape != v.shape or p.ndim != 1:
        raise ValueError("histograms and bin values must be 1-D arrays of equal length")
    if np.any(np.diff(v) < 0):
        raise ValueError("bin values must be ascending")
    for name, h in (("p", p), ("q", q)):
        if abs(h.sum() - 1.0) > 1e-6 or np.any(h < 0):
            raise ValueError(f"histogram {name} is not normalized")
    gap = np.abs(np.cumsum(p) - np.cumsum(q))[:-1]
    return float(np.sum(gap * np.diff(v)))


def emd_lab(sp_s: Superpixel, sp_ns: Superpixel) -> float:
    total = 0.0
    for c in range(3):
        p = sp_s.lab_histograms[c]
        total += wasserstein_1d(p, sp_ns.lab_histograms[c], lab_bin_centers(c, len(p)))
    return total / EMD_NORMALIZER


def lbp_distance(sp_s: Superpixel, sp_ns: Superpixel) -> float:
    rho = float(np.sum(np.sqrt(sp_s.lbp_histogram * sp_ns.lbp_histogram)))
    return max(0.0, 1.0 - rho)


def a_mean_distance(sp_s: Superpixel, sp_ns: Superpixel) -> float:
    return abs(sp_s.mean_a - sp_ns.mean_a) / A_NORMALIZER


def contribution_weight(d_emd, d_lbp, d_amean, params: WeightParams = WeightParams()):
    """Works elementwise on arrays as well as on scalars."""
    return 1.0 / (
        params.alpha * d_emd + params.beta * d_lbp + params.gamma * d_amean + params.epsilon
    )


def similarity(sp_s: Superpixel, sp_ns: Superpixel, params: WeightParams = WeightParams()):
    d_emd = emd_lab(sp_s, sp_ns)
    d_lbp = lbp_distance(sp_s, sp_ns)
    d_a = a_mean_distance(sp_s, sp_ns)
    return SimilarityBreakdown(d_emd, d_lbp, d_a, contribution_weight(d_emd, d_lbp, d_a, params))


class FeatureTable:
    """Precomputed CDFs and root-histograms for batched distance queries.

    Gives the same numbers as the pairwise functions above, vectorized over
    many candidates.
    """

    def __init__(self, spmap, params: WeightParams = WeightParams()):
        self.params = params
        n_bins = spmap.lab_hist.shape[2]
        self.cdf = np.cumsum(spmap.lab_hist, axis=2)[:, :, :-1]
        self.spacing = np.array([np.diff(lab_bin_centers(c, n_bins)) for c in range(3)])
        self.sqrt_lbp = np.sqrt(spmap.lbp_hist)
        self.mean_a = spmap.mean_lab[:, 1].copy()

    def distances(self, i: int, candidates) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        candidates = np.asarray(candidates, dtype=np.int64)
        gap = np.abs(self.cdf[candidates] - self.cdf[i])
        d_emd = np.sum(np.sum(gap * self.spacing, axis=2), axis=1) / EMD_NORMALIZER
        rho = self.sqrt_lbp[candidates] @ self.sqrt_lbp[i]
        d_lbp = np.maximum(0.0, 1.0 - rho)
        d_a = np.abs(self.mean_a[i] - self.mean_a[candidates]) / A_NORMALIZER
        return d_emd, d_lbp, d_a

    def weights(self, i: int, candidates) -> np.ndarray:
        return contribution_weight(*self.distances(i, candidates), self.params)
