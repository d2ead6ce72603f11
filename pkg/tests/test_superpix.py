import math

import numpy as np
import pytest

from umbra.features import lbp_codes
from umbra.imagecore import DimensionError, rgb_to_gray, rgb_to_lab
from umbra.superpix import (
    classify_superpixels,
    compute_region_stats,
    from_labels,
    label_image,
    slic_masked,
)


def test_uniform_image_tiles_into_grid():
    img = np.full((120, 120, 3), 0.5)
    spmap = slic_masked(img, np.zeros((120, 120), bool), target_size=600)
    assert spmap.n_regions == math.ceil(14400 / 600) == 24
    assert spmap.counts.sum() == 14400
    assert np.all(np.abs(spmap.counts - 600) <= 600 // 4)
    assert not spmap.shadow.any()


def test_all_shadow_mask():
    img = np.full((40, 40, 3), 0.2)
    spmap = slic_masked(img, np.ones((40, 40), bool), target_size=100)
    assert spmap.shadow.all()
    assert len(spmap.nonshadow_ids) == 0


def test_half_split_never_crosses_mask(rng):
    img = rng.random((50, 60, 3))
    mask = np.zeros((50, 60), bool)
    mask[:, :27] = True
    spmap = slic_masked(img, mask, target_size=80)
    for i in range(spmap.n_regions):
        inside = mask.ravel()[spmap.pixel_index(i)]
        assert inside.all() or not inside.any()
        assert bool(inside.all()) == bool(spmap.shadow[i])


def test_partition_and_dense_labels(rng):
    img = rng.random((45, 33, 3))
    mask = rng.random((45, 33)) < 0.3
    spmap = slic_masked(img, mask, target_size=30)
    assert spmap.labels.min() == 0
    assert set(np.unique(spmap.labels)) == set(range(spmap.n_regions))
    assert spmap.counts.sum() == 45 * 33
    # shadow superpixels come first
    assert np.all(np.diff(spmap.shadow.astype(int)) <= 0)


def test_superpixels_are_connected(rng):
    from scipy import ndimage

    scene = rng.random((64, 64, 3))
    mask = np.zeros((64, 64), bool)
    mask[10:40, 20:50] = True
    spmap = slic_masked(scene, mask, target_size=64)
    for i in range(spmap.n_regions):
        _, n = ndimage.label(spmap.labels == i)
        assert n == 1


def test_tiny_components_are_single_superpixels(rng):
    img = rng.random((40, 40, 3))
    mask = np.zeros((40, 40), bool)
    mask[5:8, 5:9] = True  # 12 px
    mask[30, 30] = True
    spmap = slic_masked(img, mask, target_size=16)
    assert len(np.unique(spmap.labels[5:8, 5:9])) == 1
    assert spmap.shadow[spmap.labels[30, 30]]


def test_deterministic(rng):
    img = rng.random((50, 50, 3))
    mask = rng.random((50, 50)) < 0.5
    a = slic_masked(img, mask, 50)
    b = slic_masked(img.copy(), mask.copy(), 50)
    assert np.array_equal(a.labels, b.labels)


def test_errors():
    with pytest.raises(DimensionError):
        slic_masked(np.zeros((4, 4, 3)), np.zeros((4, 5), bool))
    with pytest.raises(ValueError):
        slic_masked(np.zeros((4, 4, 3)), np.zeros((4, 4), bool), target_size=15)


@pytest.mark.parametrize("n_shadow,expected", [(100, True), (81, True), (80, False), (50, False)])
def test_classification_threshold(n_shadow, expected):
    labels = np.zeros((10, 10), np.int32)
    mask = np.zeros(100, bool)
    mask[:n_shadow] = True
    spmap = classify_superpixels(from_labels(labels, mask.reshape(10, 10)), mask.reshape(10, 10))
    assert bool(spmap.shadow[0]) is expected


def test_from_labels_validation():
    with pytest.raises(ValueError):
        from_labels(np.array([[0, 2]]), np.zeros((1, 2), bool))
    with pytest.raises(DimensionError):
        from_labels(np.zeros((2, 2), int), np.zeros((1, 2), bool))


def _stats(img, labels):
    spmap = from_labels(labels, np.zeros(labels.shape, bool))
    compute_region_stats(img, rgb_to_lab(img), lbp_codes(rgb_to_gray(img)), spmap)
    return spmap


def test_region_stats(rng):
    img = np.zeros((1, 2, 3))
    img[0, 1] = 1
    spmap = _stats(img, np.zeros((1, 2), np.int32))
    assert np.allclose(spmap.mean_rgb[0], 0.5)
    sp = spmap.region(0)
    assert sp.mean_a == pytest.approx(sp.mean_lab[1])
    assert np.allclose(sp.centroid, [0, 0.5])

    const = _stats(np.full((6, 6, 3), 0.3), np.zeros((6, 6), np.int32)).region(0)
    assert np.all(np.count_nonzero(const.lab_histograms, axis=1) == 1)
    assert np.count_nonzero(const.lbp_histogram) == 1

    img = rng.random((30, 30, 3))
    labels = (np.arange(900).reshape(30, 30) // 100).astype(np.int32)
    spmap = _stats(img, labels)
    assert np.allclose(spmap.lab_hist.sum(axis=2), 1, atol=1e-9)
    assert np.allclose(spmap.lbp_hist.sum(axis=1), 1, atol=1e-9)
    for sp in spmap:
        assert 0 <= sp.centroid[0] < 30 and 0 <= sp.centroid[1] < 30
        assert len(sp.pixel_coords) == 100


def test_text_dump_and_label_image(rng):
    img = rng.random((20, 20, 3))
    spmap = _stats(img, (np.arange(400).reshape(20, 20) // 100).astype(np.int32))
    lines = spmap.to_lines()
    assert len(lines) == 4
    assert lines[0].split("\t")[:2] == ["0", "nonshadow"]
    rgb = label_image(spmap)
    assert rgb.shape == (20, 20, 3)
    assert len(np.unique(rgb.reshape(-1, 3), axis=0)) == 4
