"""Lighting and contrast metrics extracted from 8-bit rasters.

Images are numpy arrays: (H, W) uint8 for grayscale or (H, W, 3) uint8 RGB.
All statistics are computed in float64, so nothing is lost to integer
truncation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class PhotometryError(ValueError):
    """Raised for images that cannot be measured (empty or malformed)."""


@dataclass(frozen=True)
class LightingStats:
    """Per-image lighting summary.

    mean_brightness / std_brightness are the mean and population standard
    deviation of the luma-grayscale image; contrast is grayscale max minus
    min; global_luminance is the mean of the per-pixel maximum channel
    (equal to mean_brightness for grayscale input).
    """

    mean_brightness: float
    std_brightness: float
    global_luminance: float
    contrast: float


def _validate(img: np.ndarray) -> np.ndarray:
    arr = np.asarray(img)
    if arr.size == 0:
        raise PhotometryError("zero-size image")
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] == 3:
        return arr
    raise PhotometryError(f"expected (H,W) or (H,W,3) image, got shape {arr.shape}")


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Luma grayscale (0.299 R + 0.587 G + 0.114 B) as float64."""
    arr = _validate(img)
    if arr.ndim == 2:
        return arr.astype(np.float64)
    r, g, b = LUMA_WEIGHTS
    f = arr.astype(np.float64)
    return r * f[..., 0] + g * f[..., 1] + b * f[..., 2]


def lighting_stats(img: np.ndarray) -> LightingStats:
    """Compute the lighting metrics for one image."""
    arr = _validate(img)
    gray = to_grayscale(arr)
    mean_brightness = float(gray.mean())
    std_brightness = float(gray.std())  # population std
    contrast = float(gray.max() - gray.min())
    if arr.ndim == 2:
        global_luminance = mean_brightness
    else:
        value = arr.astype(np.float64).max(axis=2)
        global_luminance = float(value.mean())
    return LightingStats(
        mean_brightness=mean_brightness,
        std_brightness=std_brightness,
        global_luminance=global_luminance,
        contrast=contrast,
    )
