import numpy as np

from umbra.detect import DetectConfig, candidate_pixels, detect_shadows
from umbra.metrics import confusion, detection_metrics


def test_constant_image_gives_empty_mask():
    m = detect_shadows(np.full((30, 40, 3), 0.8))
    assert m.shape == (30, 40) and m.dtype == bool and not m.any()


def test_darkened_rectangle(rng):
    img = np.full((100, 100, 3), 0.7) + rng.uniform(-0.02, 0.02, (100, 100, 3))
    img[:, :, 2] += 0.05
    gt = np.zeros((100, 100), bool)
    gt[30:70, 20:60] = True
    img[gt] *= [0.3, 0.35, 0.5]
    m = detect_shadows(img)
    assert detection_metrics(confusion(m, gt))["iou"] >= 90


def test_percentile_monotone(rng):
    img = rng.random((40, 40, 3))
    prev = None
    for q in (0.1, 0.3, 0.5, 0.8):
        cand = candidate_pixels(img, DetectConfig(value_percentile=q))
        if prev is not None:
            assert np.all(cand[prev])
        prev = cand


def test_small_components_dropped():
    img = np.full((40, 40, 3), 0.8)
    img[5:7, 5:7] = [0.1, 0.1, 0.3]
    img[20:35, 20:35] = [0.1, 0.1, 0.3]
    m = detect_shadows(img, DetectConfig(value_percentile=0.5))
    assert not m[5:7, 5:7].any() and m[20:35, 20:35].all()
