"""Preprocessing operators applied before detection and recognition.

Two operators: integer upscaling (bicubic by default, nearest-neighbor for
exact-histogram checks) and affine brightness adjustment with an optional
low-light gate. Both are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

from .photometry import LightingStats, lighting_stats

DEFAULT_LOW_LIGHT_THRESHOLD = 60.0

_INTERPOLATIONS = {
    "bicubic": cv2.INTER_CUBIC,
    "nearest": cv2.INTER_NEAREST,
}


class PreprocessError(ValueError):
    pass


def upscale(img: np.ndarray, factor: int, interpolation: str = "bicubic") -> np.ndarray:
    """Upscale an image by an integer factor; factor 1 returns a copy."""
    if int(factor) != factor or factor < 1:
        raise PreprocessError(f"upscale factor must be a positive integer, got {factor}")
    if interpolation not in _INTERPOLATIONS:
        raise PreprocessError(f"unknown interpolation: {interpolation!r}")
    factor = int(factor)
    if factor == 1:
        return img.copy()
    h, w = img.shape[:2]
    return cv2.resize(
        img, (w * factor, h * factor), interpolation=_INTERPOLATIONS[interpolation]
    )


def adjust_brightness(img: np.ndarray, gain: float, offset: float) -> np.ndarray:
    """Per-pixel value' = clamp(gain * value + offset, 0, 255)."""
    if gain <= 0:
        raise PreprocessError(f"gain must be positive, got {gain}")
    out = np.clip(np.rint(img.astype(np.float64) * gain + offset), 0, 255)
    return out.astype(np.uint8)


def select_low_light(stats: LightingStats, threshold: float = DEFAULT_LOW_LIGHT_THRESHOLD) -> bool:
    """True when an image is dim enough to warrant brightness enhancement."""
    return stats.mean_brightness < threshold


@dataclass(frozen=True)
class PreprocessingChain:
    """Configured preprocessing applied by the pipeline.

    Brightness (gated on mean brightness when gate_threshold is set) runs
    first, then upscaling. scale_factor reports the coordinate scale the
    chain introduces so detections can be mapped back to the input frame.
    """

    upscale_factor: int = 1
    interpolation: str = "bicubic"
    brightness_enabled: bool = False
    brightness_gain: float = 1.0
    brightness_offset: float = 0.0
    gate_threshold: float | None = DEFAULT_LOW_LIGHT_THRESHOLD

    @property
    def scale_factor(self) -> int:
        return int(self.upscale_factor)

    def apply(self, img: np.ndarray) -> np.ndarray:
        out = img
        if self.brightness_enabled:
            gated = self.gate_threshold is None or select_low_light(
                lighting_stats(out), self.gate_threshold
            )
            if gated:
                out = adjust_brightness(out, self.brightness_gain, self.brightness_offset)
        if self.upscale_factor != 1:
            out = upscale(out, self.upscale_factor, self.interpolation)
        return out
