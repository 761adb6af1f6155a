"""Gaze-conditioned region-of-interest processing.

Aligns exported gaze samples to frames by nearest timestamp, crops a square
attention window around the gaze point (side = frame width / 16 by
default), runs the text pipeline inside it, and remaps results to
full-frame coordinates.
"""

from __future__ import annotations

import csv
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .engines import Detector, Recognizer, TextRegion, run_pipeline
from .fileio import DataError
from .geometry import Box, MergeParams
from .preprocess import PreprocessingChain

DEFAULT_ROI_FRACTION = 1.0 / 16.0


class GazeError(ValueError):
    pass


@dataclass(frozen=True)
class GazeSample:
    """One gaze point: nanoseconds since stream epoch, full-frame pixels."""

    timestamp_ns: int
    x: float
    y: float


@dataclass(frozen=True)
class RoiParams:
    """Attention window side as a fraction of the frame width."""

    fraction: float = DEFAULT_ROI_FRACTION

    def __post_init__(self):
        if not (0.0 < self.fraction <= 1.0):
            raise GazeError(f"roi fraction must be in (0, 1], got {self.fraction}")


def load_gaze_csv(path) -> list[GazeSample]:
    """Read a gaze track CSV with header timestamp_ns,gaze_x_px,gaze_y_px."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file: {path}")
    samples: list[GazeSample] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        required = {"timestamp_ns", "gaze_x_px", "gaze_y_px"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataError(f"gaze CSV needs columns {sorted(required)}: {path}")
        for i, row in enumerate(reader):
            try:
                samples.append(
                    GazeSample(
                        timestamp_ns=int(row["timestamp_ns"]),
                        x=float(row["gaze_x_px"]),
                        y=float(row["gaze_y_px"]),
                    )
                )
            except (TypeError, ValueError) as e:
                raise DataError(f"gaze CSV row {i}: {e}") from e
    _check_sorted(samples)
    return samples


def load_frame_index(path) -> list[tuple[str, int, str]]:
    """Read a frame-index CSV with header frame_id,timestamp_ns,path."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file: {path}")
    frames: list[tuple[str, int, str]] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        required = {"frame_id", "timestamp_ns", "path"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataError(f"frame index CSV needs columns {sorted(required)}: {path}")
        for row in reader:
            frames.append((row["frame_id"], int(row["timestamp_ns"]), row["path"]))
    return frames


def _check_sorted(track: Sequence[GazeSample]) -> None:
    for a, b in zip(track, track[1:]):
        if b.timestamp_ns <= a.timestamp_ns:
            raise GazeError(
                f"gaze track not strictly increasing at t={b.timestamp_ns}"
            )


def align_gaze(
    frames: Sequence[tuple[str, int]],
    track: Sequence[GazeSample],
    tolerance_ns: int,
) -> list[tuple[str, GazeSample | None]]:
    """Pair each (frame id, timestamp) with the nearest gaze sample.

    A frame gets None when no sample lies within the tolerance. The track
    must be sorted by timestamp.
    """
    _check_sorted(track)
    times = [s.timestamp_ns for s in track]
    out: list[tuple[str, GazeSample | None]] = []
    for frame_id, t in frames:
        best = None
        if times:
            i = bisect_left(times, t)
            candidates = [j for j in (i - 1, i) if 0 <= j < len(times)]
            j = min(candidates, key=lambda j: abs(times[j] - t))
            if abs(times[j] - t) <= tolerance_ns:
                best = track[j]
        out.append((frame_id, best))
    return out


def gaze_window(
    gaze: GazeSample, frame_w: int, frame_h: int, params: RoiParams = RoiParams()
) -> Box:
    """Square window centred on the gaze point, translated (never shrunk) to
    lie fully inside the frame; clipped to the frame only when the side
    exceeds a frame dimension."""
    if frame_w <= 0 or frame_h <= 0:
        raise GazeError("frame dimensions must be positive")
    side = max(1, round(frame_w * params.fraction))
    sx = min(side, frame_w)
    sy = min(side, frame_h)
    x0 = round(gaze.x - sx / 2)
    y0 = round(gaze.y - sy / 2)
    x0 = min(max(x0, 0), frame_w - sx)
    y0 = min(max(y0, 0), frame_h - sy)
    return Box(float(x0), float(y0), float(x0 + sx), float(y0 + sy))


def _touches_edge(b: Box, window: Box, tol: float = 1e-6) -> bool:
    w = window.width
    h = window.height
    return (
        b.x_min <= tol
        or b.y_min <= tol
        or b.x_max >= w - tol
        or b.y_max >= h - tol
    )


def gaze_run(
    frame: np.ndarray,
    gaze: GazeSample,
    detector: Detector,
    merge: MergeParams,
    recognizer: Recognizer,
    params: RoiParams = RoiParams(),
    preproc: PreprocessingChain | None = None,
    image_id: str = "",
    padding: float = 0.0,
) -> list[TextRegion]:
    """Run the pipeline inside the gaze window; results in full-frame coordinates.

    Regions abutting the window border are flagged truncated: text straddling
    the window edge was clipped by the crop.
    """
    h, w = frame.shape[:2]
    if not (0 <= gaze.x < w and 0 <= gaze.y < h):
        raise GazeError(f"gaze point ({gaze.x}, {gaze.y}) outside {w}x{h} frame")
    window = gaze_window(gaze, w, h, params)
    x0, y0 = int(window.x_min), int(window.y_min)
    x1, y1 = int(window.x_max), int(window.y_max)
    crop = frame[y0:y1, x0:x1]
    regions = run_pipeline(
        crop,
        detector,
        merge,
        recognizer,
        preproc=preproc,
        image_id=image_id,
        view=window,
        padding=padding,
    )
    out: list[TextRegion] = []
    for r in regions:
        truncated = _touches_edge(r.box, window)
        out.append(
            TextRegion(
                box=r.box.translate(window.x_min, window.y_min),
                text=r.text,
                confidence=r.confidence,
                truncated=truncated,
                error=r.error,
            )
        )
    return out
