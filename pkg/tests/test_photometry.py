import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from egotext.photometry import LightingStats, PhotometryError, lighting_stats, to_grayscale


def test_constant_grayscale():
    img = np.full((16, 16), 128, dtype=np.uint8)
    s = lighting_stats(img)
    assert s == LightingStats(128.0, 0.0, 128.0, 0.0)


def test_two_pixel_extremes():
    img = np.array([[0, 255]], dtype=np.uint8)
    s = lighting_stats(img)
    assert s.mean_brightness == 127.5
    assert s.std_brightness == 127.5
    assert s.contrast == 255.0


def test_pure_red_luma():
    img = np.zeros((4, 4, 3), dtype=np.uint8)
    img[..., 0] = 255
    s = lighting_stats(img)
    assert s.mean_brightness == pytest.approx(0.299 * 255)
    assert s.global_luminance == 255.0
    assert s.contrast == 0.0


def test_zero_size_image():
    with pytest.raises(PhotometryError):
        lighting_stats(np.zeros((0, 4), dtype=np.uint8))


def test_bad_shape():
    with pytest.raises(PhotometryError):
        lighting_stats(np.zeros((4, 4, 2), dtype=np.uint8))


def test_grayscale_identity():
    img = np.arange(12, dtype=np.uint8).reshape(3, 4)
    assert np.array_equal(to_grayscale(img), img.astype(np.float64))


_gray_images = arrays(np.uint8, (6, 7), elements=st.integers(0, 255))
_rgb_images = arrays(np.uint8, (5, 6, 3), elements=st.integers(0, 255))


@given(_gray_images, st.integers(1, 40))
def test_constant_shift(img, c):
    if int(img.max()) + c > 255:  # clipping would break exact shift
        img = (img // 2).astype(np.uint8)
    base = lighting_stats(img)
    shifted = lighting_stats((img + c).astype(np.uint8))
    assert shifted.mean_brightness == pytest.approx(base.mean_brightness + c)
    assert shifted.std_brightness == pytest.approx(base.std_brightness)
    assert shifted.contrast == pytest.approx(base.contrast)


@given(_gray_images)
def test_zero_std_iff_constant(img):
    s = lighting_stats(img)
    constant = img.min() == img.max()
    assert (s.std_brightness == 0.0) == constant
    assert (s.contrast == 0.0) == constant
    if s.contrast == 0.0:
        assert s.std_brightness == 0.0


@given(_rgb_images)
def test_value_channel_dominates_luma(img):
    s = lighting_stats(img)
    assert s.global_luminance >= s.mean_brightness - 1e-9


@given(_gray_images, st.randoms(use_true_random=False))
def test_permutation_invariance(img, rnd):
    flat = img.flatten()
    perm = list(range(flat.size))
    rnd.shuffle(perm)
    shuffled = flat[perm].reshape(img.shape)
    a, b = lighting_stats(img), lighting_stats(shuffled)
    assert a.mean_brightness == pytest.approx(b.mean_brightness)
    assert a.std_brightness == pytest.approx(b.std_brightness)
    assert a.global_luminance == pytest.approx(b.global_luminance)
    assert a.contrast == b.contrast


def test_std_bounded_by_half_range():
    rng = np.random.default_rng(3)
    for _ in range(50):
        img = rng.integers(0, 256, size=(8, 8), dtype=np.uint8)
        s = lighting_stats(img)
        assert 0.0 <= s.std_brightness <= 127.5
        assert 0.0 <= s.mean_brightness <= 255.0
        assert 0.0 <= s.contrast <= 255.0
