"""Atomic file writing and image I/O helpers.

All output files are written via temp-file-then-rename so an interrupted
run never leaves a truncated CSV or JSON behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import cv2
import numpy as np


class DataError(ValueError):
    """Raised for unreadable or schema-invalid data files."""


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path: str | os.PathLike, obj) -> None:
    # sort_keys keeps repeated runs byte-identical
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path: str | os.PathLike):
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"invalid JSON in {path}: {e}") from e


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Load a PNG/JPEG as grayscale (H,W) or RGB (H,W,3) uint8."""
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise DataError(f"cannot read image: {path}")
    if raw.ndim == 2:
        return raw
    if raw.shape[2] == 4:
        raw = cv2.cvtColor(raw, cv2.COLOR_BGRA2BGR)
    return cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)


def save_image(path: str | os.PathLike, img: np.ndarray) -> None:
    if img.ndim == 3:
        encoded = cv2.imencode(".png", cv2.cvtColor(img, cv2.COLOR_RGB2BGR))
    else:
        encoded = cv2.imencode(".png", img)
    ok, buf = encoded
    if not ok:
        raise DataError(f"PNG encoding failed for {path}")
    atomic_write_bytes(path, buf.tobytes())
