"""Axis-aligned box algebra, IoU, and heuristic text-line merging.

All boxes live in image pixel coordinates: origin at the top-left corner,
y grows downward. Coordinates are continuous floats; degenerate (zero-area)
boxes are legal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import median
from typing import Sequence


class GeometryError(ValueError):
    """Raised for invalid box inputs (non-finite or inverted coordinates)."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle with x_min <= x_max and y_min <= y_max."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        for v in (self.x_min, self.y_min, self.x_max, self.y_max):
            if not math.isfinite(v):
                raise GeometryError(f"non-finite box coordinate: {v!r}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise GeometryError(
                f"inverted box: ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, other: "Box", tol: float = 1e-9) -> bool:
        return (
            self.x_min - tol <= other.x_min
            and self.y_min - tol <= other.y_min
            and other.x_max <= self.x_max + tol
            and other.y_max <= self.y_max + tol
        )

    def translate(self, dx: float, dy: float) -> "Box":
        return Box(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)

    def scale(self, factor: float) -> "Box":
        return Box(
            self.x_min * factor,
            self.y_min * factor,
            self.x_max * factor,
            self.y_max * factor,
        )

    def intersect(self, other: "Box") -> "Box | None":
        """Intersection box, or None when the two do not overlap."""
        x0 = max(self.x_min, other.x_min)
        y0 = max(self.y_min, other.y_min)
        x1 = min(self.x_max, other.x_max)
        y1 = min(self.y_max, other.y_max)
        if x0 > x1 or y0 > y1:
            return None
        return Box(x0, y0, x1, y1)

    def clip(self, width: float, height: float) -> "Box":
        """Clip to the frame [0, width] x [0, height]."""
        return Box(
            min(max(self.x_min, 0.0), width),
            min(max(self.y_min, 0.0), height),
            min(max(self.x_max, 0.0), width),
            min(max(self.y_max, 0.0), height),
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


@dataclass(frozen=True)
class ScoredBox:
    """Detector output: a box plus a confidence in [0, 1]."""

    box: Box
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise GeometryError(f"confidence outside [0,1]: {self.confidence}")


def iou(a: Box, b: Box) -> float:
    """Intersection-over-union of two boxes; 0 when the union has zero area."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    inter = max(iw, 0.0) * max(ih, 0.0)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def envelope(boxes: Sequence[Box]) -> Box:
    """Smallest box containing every box in the group."""
    if not boxes:
        raise GeometryError("empty group")
    return Box(
        min(b.x_min for b in boxes),
        min(b.y_min for b in boxes),
        max(b.x_max for b in boxes),
        max(b.y_max for b in boxes),
    )


@dataclass(frozen=True)
class MergeParams:
    """Thresholds for the line-merge heuristic.

    In "absolute" mode epsilon_y / epsilon_x are pixel distances. In
    "relative-to-median-height" mode they are multipliers on the median box
    height of the input set, resolved once per merge call.
    """

    epsilon_y: float = 0.5
    epsilon_x: float = 1.0
    mode: str = "relative-to-median-height"

    _MODES = ("absolute", "relative-to-median-height")

    def __post_init__(self):
        if self.epsilon_y < 0 or self.epsilon_x < 0:
            raise GeometryError("merge thresholds must be non-negative")
        if self.mode not in self._MODES:
            raise GeometryError(f"unknown merge mode: {self.mode!r}")

    def resolve(self, boxes: Sequence[Box]) -> tuple[float, float]:
        """Concrete pixel thresholds for this input set."""
        if self.mode == "absolute" or not boxes:
            return self.epsilon_y, self.epsilon_x
        med_h = median(b.height for b in boxes)
        return self.epsilon_y * med_h, self.epsilon_x * med_h


def _sort_key(b: Box) -> tuple[float, float, float, float]:
    # Lexicographic tie-breaking keeps the merge deterministic.
    return (b.y_min, b.x_min, b.x_max, b.y_max)


def _merge_pass(boxes: list[Box], eps_y: float, eps_x: float) -> list[Box]:
    ordered = sorted(boxes, key=_sort_key)

    # Phase 1: group into candidate lines by vertical edge proximity.
    lines: list[list[Box]] = []
    line_envs: list[Box] = []
    for b in ordered:
        placed = False
        for i, env in enumerate(line_envs):
            if (
                abs(b.y_min - env.y_min) <= eps_y
                or abs(b.y_max - env.y_max) <= eps_y
            ):
                lines[i].append(b)
                line_envs[i] = envelope([env, b])
                placed = True
                break
        if not placed:
            lines.append([b])
            line_envs.append(b)

    # Phase 2: split each line wherever the horizontal gap exceeds eps_x,
    # then collapse every run into its envelope.
    out: list[Box] = []
    for line in lines:
        members = sorted(line, key=lambda b: (b.x_min, b.y_min, b.x_max, b.y_max))
        run: list[Box] = [members[0]]
        run_env = members[0]
        for b in members[1:]:
            gap = max(0.0, b.x_min - run_env.x_max)
            if gap > eps_x:
                out.append(run_env)
                run = [b]
                run_env = b
            else:
                run.append(b)
                run_env = envelope([run_env, b])
        out.append(run_env)

    out.sort(key=_sort_key)
    return out


def merge_boxes(boxes: Sequence[Box], params: MergeParams) -> list[Box]:
    """Merge detector boxes into coherent line regions.

    Two-phase grouping (lines by vertical edge proximity, then gap-splitting
    along x) iterated to a fixpoint, so the result is idempotent and
    independent of the input ordering. Relative thresholds are resolved once
    against the median height of the original input.
    """
    if not boxes:
        return []
    eps_y, eps_x = params.resolve(boxes)
    current = sorted(boxes, key=_sort_key)
    for _ in range(len(boxes)):
        merged = _merge_pass(current, eps_y, eps_x)
        if merged == current:
            break
        current = merged
    return current
