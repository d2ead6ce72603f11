import numpy as np
import pytest

from oracles import morph_scan, morph_shift
from umbra.penumbra import dilate, erode, extract_penumbra, morph, smooth_boundary


def test_single_pixel_erodes_away():
    m = np.zeros((5, 5), bool)
    m[2, 2] = True
    assert not erode(m, 1).any()
    assert dilate(m, 1).sum() == 5


def test_dilate_erode_all_ones():
    m = np.ones((9, 9), bool)
    assert dilate(erode(m, 2), 2)[2:-2, 2:-2].all()
    # erosion shrinks at the image border
    assert not erode(m, 1)[0].any()


@pytest.mark.parametrize("r", [1, 2, 3, 5])
def test_morphology_matches_scan(r, rng):
    for _ in range(5):
        m = rng.random((24, 24)) < rng.uniform(0.05, 0.6)
        assert np.array_equal(dilate(m, r), morph_scan(m, r, "dilate"))
        assert np.array_equal(erode(m, r), morph_scan(m, r, "erode"))


def test_square_band_r2():
    m = np.zeros((20, 20), bool)
    m[5:15, 5:15] = True
    band = extract_penumbra(m, 2)
    want = morph_scan(m, 2, "dilate") & ~morph_scan(m, 2, "erode")
    assert np.array_equal(band.band, want)
    assert band.band[5:7, 5:15].all() and band.band[3:5, 5:15].all()
    assert not band.band[7:13, 7:13].any()
    assert np.all(band.dist_inner[band.band] + band.dist_outer[band.band] >= 1)


def test_morph_dispatch_and_errors():
    m = np.eye(4, dtype=bool)
    assert np.array_equal(morph(m, 1, "dilate"), dilate(m, 1))
    with pytest.raises(ValueError):
        morph(m, 1, "open")
    with pytest.raises(ValueError):
        dilate(m, -1)


def test_empty_mask_empty_band():
    assert not extract_penumbra(np.zeros((6, 6), bool), 3).band.any()


def test_blend_coefficient_monotone_across_straight_edge():
    m = np.zeros((9, 30), bool)
    m[:, :15] = True
    band = extract_penumbra(m, 3)
    t = band.blend_coefficient()[4]
    cols = np.flatnonzero(band.band[4])
    assert np.all(np.diff(t[cols]) <= 0)
    assert t[cols[0]] >= 0.5 and t[cols[-1]] <= 0.5


def _strip(r=3, width=40, edge=20):
    mask = np.zeros((11, width), bool)
    mask[:, :edge] = True
    original = np.ones((11, width, 3))
    relit = original.copy()
    relit[mask] = 0.5
    return mask, original, relit


def test_smoothing_profile_ramp():
    mask, original, relit = _strip()
    band = extract_penumbra(mask, 3)
    out = smooth_boundary(original, relit, band)
    row = out[5, :, 0]
    assert np.all(np.diff(row) >= -1e-12)
    width = int(band.band[5].sum())
    assert np.max(np.abs(np.diff(row))) <= 0.5 / width + 0.5 / 3 + 1e-9
    assert np.max(np.abs(np.diff(relit[5, :, 0]))) == 0.5


def test_smoothing_locality_and_identity(rng):
    m = rng.random((30, 30)) < 0.3
    m = dilate(erode(m, 1), 1)
    orig = rng.random((30, 30, 3))
    relit = orig.copy()
    relit[m] *= 1.7
    band = extract_penumbra(m, 2)
    out = smooth_boundary(orig, relit, band)
    outside = ~band.band
    assert np.array_equal(out[outside], relit[outside])
    assert np.array_equal(smooth_boundary(orig, orig, band), orig)


def test_zero_radius_is_noop(rng):
    m = np.zeros((10, 10), bool)
    m[3:7, 3:7] = True
    orig = rng.random((10, 10, 3))
    relit = orig * 1.5
    assert np.array_equal(smooth_boundary(orig, relit, extract_penumbra(m, 0)), relit)


def test_shift_oracle_agrees_with_scan_oracle(rng):
    for _ in range(5):
        m = rng.random((17, 13)) < 0.5
        for r in (0, 1, 2, 4):
            for op in ("dilate", "erode"):
                assert np.array_equal(morph_shift(m, r, op), morph_scan(m, r, op))
