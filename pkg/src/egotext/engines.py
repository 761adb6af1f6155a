"""Detection/recognition engine contracts, deterministic mock engines, and
the detect -> merge -> recognize pipeline.

Mock engines are oracles driven by ground truth with configurable, seeded
noise, so the whole pipeline can be verified end to end without any
pretrained model. Real engine adapters live in ``egotext.adapters`` and are
optional.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .dataset import GroundTruthRegion
from .geometry import Box, MergeParams, ScoredBox, iou, merge_boxes
from .preprocess import PreprocessingChain


class EngineError(RuntimeError):
    pass


class EngineUnavailableError(EngineError):
    """A configured real engine (model file or library) is not installed."""


@dataclass(frozen=True)
class ViewTransform:
    """Maps full-frame coordinates to the coordinates of the image an engine sees.

    The pipeline may hand engines a cropped and/or upscaled view of the
    original frame; oracle engines use this to place ground truth correctly.
    Real engines ignore it.
    """

    offset_x: float = 0.0
    offset_y: float = 0.0
    scale: float = 1.0

    def to_view(self, b: Box) -> Box:
        return Box(
            (b.x_min - self.offset_x) * self.scale,
            (b.y_min - self.offset_y) * self.scale,
            (b.x_max - self.offset_x) * self.scale,
            (b.y_max - self.offset_y) * self.scale,
        )

    def to_full(self, b: Box) -> Box:
        return Box(
            b.x_min / self.scale + self.offset_x,
            b.y_min / self.scale + self.offset_y,
            b.x_max / self.scale + self.offset_x,
            b.y_max / self.scale + self.offset_y,
        )


IDENTITY_TRANSFORM = ViewTransform()


@dataclass(frozen=True)
class RecognizedText:
    text: str
    confidence: float


@dataclass(frozen=True)
class TextRegion:
    """Pipeline output: a region with its recognized text."""

    box: Box
    text: str
    confidence: float
    truncated: bool = False
    error: bool = False


@runtime_checkable
class Detector(Protocol):
    name: str
    reentrant: bool

    def detect(
        self,
        img: np.ndarray,
        image_id: str = "",
        transform: ViewTransform = IDENTITY_TRANSFORM,
    ) -> list[ScoredBox]: ...


@runtime_checkable
class Recognizer(Protocol):
    name: str
    reentrant: bool

    def recognize(
        self,
        region: np.ndarray,
        box: Box | None = None,
        image_id: str = "",
        transform: ViewTransform = IDENTITY_TRANSFORM,
    ) -> RecognizedText: ...


# --------------------------------------------------------------------------
# mock engines
# --------------------------------------------------------------------------


def _derived_rng(seed: int, *parts) -> random.Random:
    key = "|".join([str(seed), *(str(p) for p in parts)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


@dataclass(frozen=True)
class MockSpec:
    """Ground truth plus noise knobs for the mock engines.

    Regions are keyed by image id; the empty key is a wildcard used for any
    id without its own entry. All noise is drawn from a generator derived
    from (seed, image id), so repeated calls are identical.
    """

    regions: dict[str, tuple[GroundTruthRegion, ...]] = field(default_factory=dict)
    drop_rate: float = 0.0
    jitter_px: float = 0.0
    char_error_rate: float = 0.0
    seed: int = 0
    alphabet: str = "abcdefghijklmnopqrstuvwxyz"

    def __post_init__(self):
        for name, v in (("drop_rate", self.drop_rate), ("char_error_rate", self.char_error_rate)):
            if not (0.0 <= v <= 1.0):
                raise EngineError(f"{name} must be in [0,1], got {v}")
        if self.jitter_px < 0:
            raise EngineError(f"jitter_px must be non-negative, got {self.jitter_px}")

    @classmethod
    def from_regions(cls, regions: Sequence[GroundTruthRegion], **kwargs) -> "MockSpec":
        return cls(regions={"": tuple(regions)}, **kwargs)

    def regions_for(self, image_id: str) -> tuple[GroundTruthRegion, ...]:
        if image_id in self.regions:
            return self.regions[image_id]
        return self.regions.get("", ())


def mock_detect(
    img: np.ndarray,
    spec: MockSpec,
    image_id: str = "",
    transform: ViewTransform = IDENTITY_TRANSFORM,
) -> list[ScoredBox]:
    """Return the ground-truth boxes with seeded drop and jitter noise, clipped
    to the image the detector was shown."""
    h, w = img.shape[:2]
    frame = Box(0.0, 0.0, float(w), float(h))
    rng = _derived_rng(spec.seed, "detect", image_id)
    noiseless = spec.drop_rate == 0.0 and spec.jitter_px == 0.0
    out: list[ScoredBox] = []
    for region in spec.regions_for(image_id):
        if spec.drop_rate > 0.0 and rng.random() < spec.drop_rate:
            continue
        b = transform.to_view(region.box)
        if spec.jitter_px > 0.0:
            j = spec.jitter_px
            edges = [v + rng.uniform(-j, j) for v in b.as_tuple()]
            b = Box(
                min(edges[0], edges[2]),
                min(edges[1], edges[3]),
                max(edges[0], edges[2]),
                max(edges[1], edges[3]),
            )
        clipped = b.intersect(frame)
        if clipped is None or clipped.area == 0.0:
            continue
        confidence = 1.0 if noiseless else 0.5 + 0.5 * rng.random()
        out.append(ScoredBox(box=clipped, confidence=confidence))
    return out


def mock_recognize(
    region: np.ndarray,
    spec: MockSpec,
    box: Box | None = None,
    image_id: str = "",
    transform: ViewTransform = IDENTITY_TRANSFORM,
) -> RecognizedText:
    """Return the text of the max-IoU ground-truth region for the query box,
    with seeded per-character substitution noise; empty string when the query
    overlaps no ground truth."""
    if box is None:
        return RecognizedText("", 0.0)
    query = transform.to_full(box)
    best_text = ""
    best_iou = 0.0
    for gt in spec.regions_for(image_id):
        v = iou(gt.box, query)
        if v > best_iou:
            best_iou = v
            best_text = gt.text
    if best_iou == 0.0:
        return RecognizedText("", 0.0)
    if spec.char_error_rate > 0.0:
        rng = _derived_rng(spec.seed, "recognize", image_id, *query.as_tuple())
        chars = []
        for ch in best_text:
            if rng.random() < spec.char_error_rate:
                candidates = [c for c in spec.alphabet if c != ch]
                chars.append(rng.choice(candidates) if candidates else ch)
            else:
                chars.append(ch)
        best_text = "".join(chars)
    return RecognizedText(best_text, 1.0 if spec.char_error_rate == 0.0 else best_iou)


class MockDetector:
    reentrant = True

    def __init__(self, spec: MockSpec):
        self.spec = spec
        self.name = "mock"

    def detect(self, img, image_id="", transform=IDENTITY_TRANSFORM):
        return mock_detect(img, self.spec, image_id=image_id, transform=transform)


class MockRecognizer:
    reentrant = True

    def __init__(self, spec: MockSpec):
        self.spec = spec
        self.name = "mock"

    def recognize(self, region, box=None, image_id="", transform=IDENTITY_TRANSFORM):
        return mock_recognize(
            region, self.spec, box=box, image_id=image_id, transform=transform
        )


class CountingDetector:
    """Wrapper that counts pixels submitted to the wrapped detector."""

    def __init__(self, inner: Detector):
        self.inner = inner
        self.name = inner.name
        self.reentrant = False  # shared counter
        self.pixels_seen = 0
        self.calls = 0

    def detect(self, img, image_id="", transform=IDENTITY_TRANSFORM):
        h, w = img.shape[:2]
        self.pixels_seen += h * w
        self.calls += 1
        return self.inner.detect(img, image_id=image_id, transform=transform)


# --------------------------------------------------------------------------
# pipeline
# --------------------------------------------------------------------------


def run_pipeline(
    img: np.ndarray,
    detector: Detector,
    merge: MergeParams,
    recognizer: Recognizer,
    preproc: PreprocessingChain | None = None,
    image_id: str = "",
    view: Box | None = None,
    padding: float = 0.0,
) -> list[TextRegion]:
    """Detect, merge, crop and recognize; results are in the frame of ``img``.

    When the preprocessing chain upscales, detections are rescaled back, so
    output coordinates always refer to the image passed in. ``view`` declares
    which region of the original full frame ``img`` covers (for oracle
    engines); it does not change the output frame. A recognizer failure on
    one region yields that region with empty text and error=True instead of
    aborting the pipeline.
    """
    h, w = img.shape[:2]
    chain = preproc or PreprocessingChain()
    processed = chain.apply(img)
    scale = float(chain.scale_factor)
    transform = ViewTransform(
        offset_x=view.x_min if view is not None else 0.0,
        offset_y=view.y_min if view is not None else 0.0,
        scale=scale,
    )
    detections = detector.detect(processed, image_id=image_id, transform=transform)
    merged = merge_boxes([sb.box for sb in detections], merge)

    ph, pw = processed.shape[:2]
    regions: list[TextRegion] = []
    for m in merged:
        padded = Box(
            m.x_min - padding, m.y_min - padding, m.x_max + padding, m.y_max + padding
        ).clip(pw, ph)
        x0, y0 = int(np.floor(padded.x_min)), int(np.floor(padded.y_min))
        x1, y1 = int(np.ceil(padded.x_max)), int(np.ceil(padded.y_max))
        crop = processed[y0:y1, x0:x1]
        text, confidence, error = "", 0.0, False
        if crop.size == 0:
            error = True
        else:
            try:
                result = recognizer.recognize(
                    crop, box=m, image_id=image_id, transform=transform
                )
                text, confidence = result.text, result.confidence
            except EngineUnavailableError:
                raise
            except Exception:
                error = True
        out_box = m.scale(1.0 / scale).clip(float(w), float(h))
        regions.append(
            TextRegion(box=out_box, text=text, confidence=confidence, error=error)
        )
    return regions
