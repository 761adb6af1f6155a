"""Optional adapters for real pretrained engines.

These satisfy the same Detector/Recognizer contracts as the mocks but need
external artifacts (an EAST frozen graph, the tesseract binary, or the
easyocr package). Everything degrades to EngineUnavailableError when the
artifact is missing, so the rest of the harness runs without them.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import cv2
import numpy as np

from .engines import (
    EngineUnavailableError,
    IDENTITY_TRANSFORM,
    RecognizedText,
)
from .geometry import Box, ScoredBox


@dataclass(frozen=True)
class EngineConfig:
    """Configuration block for a real engine."""

    name: str
    model_path: str = ""
    score_threshold: float = 0.5
    nms_threshold: float = 0.4
    device: str = ""  # free-form hint, passed through


def _decode_east(scores: np.ndarray, geometry: np.ndarray, score_threshold: float):
    """Decode EAST score/geometry maps into axis-aligned boxes + confidences."""
    boxes = []
    confidences = []
    num_rows, num_cols = scores.shape[2:4]
    for y in range(num_rows):
        s = scores[0, 0, y]
        d0, d1, d2, d3 = (geometry[0, k, y] for k in range(4))
        angles = geometry[0, 4, y]
        for x in range(num_cols):
            if s[x] < score_threshold:
                continue
            ox, oy = x * 4.0, y * 4.0
            cos, sin = np.cos(angles[x]), np.sin(angles[x])
            h = d0[x] + d2[x]
            w = d1[x] + d3[x]
            ex = ox + cos * d1[x] + sin * d2[x]
            ey = oy - sin * d1[x] + cos * d2[x]
            # axis-aligned envelope of the rotated rectangle
            boxes.append([int(ex - w), int(ey - h), int(w), int(h)])
            confidences.append(float(s[x]))
    return boxes, confidences


class EastDetector:
    """EAST text detector through the OpenCV DNN runtime."""

    INPUT_SIZE = 320  # must be a multiple of 32

    def __init__(self, config: EngineConfig):
        if not config.model_path or not os.path.exists(config.model_path):
            raise EngineUnavailableError(
                f"EAST model file not found: {config.model_path!r}"
            )
        self.config = config
        self.name = "east"
        self.reentrant = False
        self.net = cv2.dnn.readNet(config.model_path)

    def detect(self, img, image_id="", transform=IDENTITY_TRANSFORM):
        h, w = img.shape[:2]
        if img.ndim == 2:
            img = cv2.cvtColor(img, cv2.COLOR_GRAY2RGB)
        size = self.INPUT_SIZE
        blob = cv2.dnn.blobFromImage(
            img, 1.0, (size, size), (123.68, 116.78, 103.94), swapRB=False, crop=False
        )
        self.net.setInput(blob)
        scores, geometry = self.net.forward(
            ["feature_fusion/Conv_7/Sigmoid", "feature_fusion/concat_3"]
        )
        raw_boxes, confidences = _decode_east(
            scores, geometry, self.config.score_threshold
        )
        keep = cv2.dnn.NMSBoxes(
            raw_boxes, confidences, self.config.score_threshold, self.config.nms_threshold
        )
        sx, sy = w / size, h / size
        out = []
        for i in np.array(keep).flatten():
            bx, by, bw, bh = raw_boxes[i]
            box = Box(
                max(0.0, bx * sx),
                max(0.0, by * sy),
                min(float(w), (bx + bw) * sx),
                min(float(h), (by + bh) * sy),
            )
            if box.area > 0:
                out.append(ScoredBox(box=box, confidence=min(1.0, confidences[i])))
        return out


class TesseractRecognizer:
    def __init__(self, config: EngineConfig | None = None):
        try:
            import pytesseract
        except ImportError as e:
            raise EngineUnavailableError("pytesseract is not installed") from e
        self._pytesseract = pytesseract
        self.name = "tesseract"
        self.reentrant = False
        self.config = config or EngineConfig(name="tesseract")

    def recognize(self, region, box=None, image_id="", transform=IDENTITY_TRANSFORM):
        text = self._pytesseract.image_to_string(region).strip()
        return RecognizedText(text=text, confidence=1.0 if text else 0.0)


class EasyOcrRecognizer:
    """CRNN-style recognition through easyocr."""

    def __init__(self, config: EngineConfig | None = None, languages=("en",)):
        try:
            import easyocr
        except ImportError as e:
            raise EngineUnavailableError("easyocr is not installed") from e
        self.name = "easyocr"
        self.reentrant = False
        self.config = config or EngineConfig(name="easyocr")
        self.reader = easyocr.Reader(list(languages), gpu=False, verbose=False)

    def recognize(self, region, box=None, image_id="", transform=IDENTITY_TRANSFORM):
        results = self.reader.readtext(region, detail=1)
        if not results:
            return RecognizedText(text="", confidence=0.0)
        results.sort(key=lambda r: (min(p[1] for p in r[0]), min(p[0] for p in r[0])))
        text = " ".join(r[1] for r in results)
        confidence = float(min(1.0, max(0.0, min(r[2] for r in results))))
        return RecognizedText(text=text, confidence=confidence)
