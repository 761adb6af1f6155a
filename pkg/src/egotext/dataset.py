"""Ground-truth ingestion and the synthetic poster dataset generator.

The generator renders a fixed poster string with a bitmap font onto a white
canvas, so every word's bounding box is exact layout arithmetic, then walks
a cross-product of lighting / distance / resolution variants to produce a
controlled condition grid with a manifest binding each image to its ground
truth and conditions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from . import fontdata
from .fileio import DataError, read_json, save_image, write_json
from .geometry import Box, GeometryError

LIGHTING_CONDITIONS = ("natural", "natural+artificial", "natural+enhanced", "night")

DEFAULT_POSTER_TEXT = "Hello world! This is Joseph testing the Meta glasses"


@dataclass(frozen=True)
class ConditionMetadata:
    """The three experimental axes attached to one sample."""

    lighting: str
    distance_m: float
    capture_width: int
    capture_height: int

    def __post_init__(self):
        if self.lighting not in LIGHTING_CONDITIONS:
            raise DataError(f"unknown lighting condition: {self.lighting!r}")
        if self.distance_m <= 0:
            raise DataError(f"distance must be positive, got {self.distance_m}")
        if self.capture_width <= 0 or self.capture_height <= 0:
            raise DataError("capture dimensions must be positive")

    def to_dict(self) -> dict:
        return {
            "lighting": self.lighting,
            "distance_m": self.distance_m,
            "width": self.capture_width,
            "height": self.capture_height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConditionMetadata":
        try:
            return cls(
                lighting=d["lighting"],
                distance_m=float(d["distance_m"]),
                capture_width=int(d["width"]),
                capture_height=int(d["height"]),
            )
        except KeyError as e:
            raise DataError(f"conditions block missing key: {e}") from e


@dataclass(frozen=True)
class GroundTruthRegion:
    """An annotated text region: box plus transcription."""

    box: Box
    text: str

    def __post_init__(self):
        if not self.text:
            raise DataError("ground-truth region with empty text")


@dataclass
class GroundTruthEntry:
    image: str
    regions: list[GroundTruthRegion]
    conditions: ConditionMetadata | None = None


def _region_from_dict(d: dict) -> GroundTruthRegion:
    if "box" in d:
        vals = d["box"]
        if len(vals) != 4:
            raise DataError(f"box must have 4 values, got {len(vals)}")
        x0, y0, x1, y1 = (float(v) for v in vals)
    elif "points" in d:
        pts = d["points"]
        if len(pts) != 4:
            raise DataError(f"polygon must have 4 points, got {len(pts)}")
        xs = [float(p[0]) for p in pts]
        ys = [float(p[1]) for p in pts]
        x0, y0, x1, y1 = min(xs), min(ys), max(xs), max(ys)
    else:
        raise DataError("region needs a 'box' or 'points' field")
    if min(x0, y0, x1, y1) < 0:
        raise DataError(f"negative coordinate in region: ({x0}, {y0}, {x1}, {y1})")
    try:
        box = Box(x0, y0, x1, y1)
    except GeometryError as e:
        raise DataError(str(e)) from e
    text = d.get("text", "")
    return GroundTruthRegion(box=box, text=text)


def load_ground_truth(path) -> tuple[list[GroundTruthEntry], list[str]]:
    """Parse a ground-truth JSON file.

    The file holds one entry or a list of entries:
    ``{"image": "...", "regions": [{"points": [[x,y]*4] | "box": [x0,y0,x1,y1],
    "text": "..."}], "conditions": {...}}``. Four-point polygons are collapsed
    to their axis-aligned envelope. Malformed entries are skipped and reported
    in the returned error list; the rest of the file still loads.
    """
    raw = read_json(path)
    if isinstance(raw, dict):
        raw = [raw]
    if not isinstance(raw, list):
        raise DataError(f"ground-truth file must hold an object or a list: {path}")
    entries: list[GroundTruthEntry] = []
    errors: list[str] = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict) or "image" not in item:
            errors.append(f"entry {i}: missing 'image' field")
            continue
        regions: list[GroundTruthRegion] = []
        for j, rd in enumerate(item.get("regions", [])):
            try:
                regions.append(_region_from_dict(rd))
            except (DataError, TypeError, ValueError) as e:
                errors.append(f"entry {i} ({item['image']}), region {j}: {e}")
        conditions = None
        if "conditions" in item:
            try:
                conditions = ConditionMetadata.from_dict(item["conditions"])
            except DataError as e:
                errors.append(f"entry {i} ({item['image']}): {e}")
        entries.append(GroundTruthEntry(image=item["image"], regions=regions, conditions=conditions))
    return entries, errors


# --------------------------------------------------------------------------
# synthetic generation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LightingVariant:
    """Lighting simulated as an affine gain/offset on the clean render."""

    name: str
    gain: float = 1.0
    offset: float = 0.0


@dataclass(frozen=True)
class DistanceVariant:
    """Distance simulated as blur plus a down-then-up resample at the canvas size.

    The meters-to-sigma mapping is a configuration choice, not a physical
    model.
    """

    meters: float
    blur_sigma: float = 0.0
    footprint_scale: int = 1


@dataclass(frozen=True)
class ResolutionVariant:
    width: int
    height: int


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for the synthetic condition grid. Deterministic under seed."""

    text: str = DEFAULT_POSTER_TEXT
    font_scale: int = 4
    canvas_width: int = 512
    canvas_height: int = 512
    lightings: tuple[LightingVariant, ...] = (LightingVariant("natural"),)
    distances: tuple[DistanceVariant, ...] = (DistanceVariant(0.5),)
    resolutions: tuple[ResolutionVariant, ...] = ()
    noise_sigma: float = 0.0
    seed: int = 1234

    def __post_init__(self):
        if self.font_scale < 1:
            raise DataError("font_scale must be >= 1")
        if self.noise_sigma < 0:
            raise DataError("noise_sigma must be non-negative")
        for d in self.distances:
            if d.blur_sigma < 0 or d.footprint_scale < 1:
                raise DataError("degradation parameters must be non-negative")

    @classmethod
    def study_axes(cls, canvas: int = 512, seed: int = 1234) -> "SyntheticSpec":
        """The desk-scale 4 lighting x 2 distance x 2 resolution grid."""
        return cls(
            canvas_width=canvas,
            canvas_height=canvas,
            lightings=(
                LightingVariant("natural", 1.0, 0.0),
                LightingVariant("natural+artificial", 1.1, 10.0),
                LightingVariant("natural+enhanced", 1.2, 25.0),
                LightingVariant("night", 0.35, 0.0),
            ),
            distances=(
                DistanceVariant(0.5, blur_sigma=0.6, footprint_scale=1),
                DistanceVariant(1.0, blur_sigma=1.2, footprint_scale=2),
            ),
            resolutions=(
                ResolutionVariant(canvas, canvas),
                ResolutionVariant(canvas // 2, canvas // 2),
            ),
            seed=seed,
        )

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "font_scale": self.font_scale,
            "canvas_width": self.canvas_width,
            "canvas_height": self.canvas_height,
            "lightings": [
                {"name": l.name, "gain": l.gain, "offset": l.offset} for l in self.lightings
            ],
            "distances": [
                {
                    "meters": d.meters,
                    "blur_sigma": d.blur_sigma,
                    "footprint_scale": d.footprint_scale,
                }
                for d in self.distances
            ],
            "resolutions": [{"width": r.width, "height": r.height} for r in self.resolutions],
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        base = cls()
        try:
            return cls(
                text=d.get("text", base.text),
                font_scale=int(d.get("font_scale", base.font_scale)),
                canvas_width=int(d.get("canvas_width", base.canvas_width)),
                canvas_height=int(d.get("canvas_height", base.canvas_height)),
                lightings=tuple(
                    LightingVariant(l["name"], float(l.get("gain", 1.0)), float(l.get("offset", 0.0)))
                    for l in d.get("lightings", [{"name": "natural"}])
                ),
                distances=tuple(
                    DistanceVariant(
                        float(x["meters"]),
                        float(x.get("blur_sigma", 0.0)),
                        int(x.get("footprint_scale", 1)),
                    )
                    for x in d.get("distances", [{"meters": 0.5}])
                ),
                resolutions=tuple(
                    ResolutionVariant(int(r["width"]), int(r["height"]))
                    for r in d.get("resolutions", [])
                ),
                noise_sigma=float(d.get("noise_sigma", 0.0)),
                seed=int(d.get("seed", base.seed)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"invalid synthetic spec: {e}") from e


def render_poster(spec: SyntheticSpec) -> tuple[np.ndarray, list[GroundTruthRegion]]:
    """Render the poster text on a white RGB canvas.

    Word boxes are the exact cell extents of the monospaced layout: every
    inked pixel of a word lies inside its box.
    """
    s = spec.font_scale
    cell_w = (fontdata.GLYPH_WIDTH + 1) * s
    glyph_h = fontdata.GLYPH_HEIGHT * s
    line_h = (fontdata.GLYPH_HEIGHT + 2) * s
    margin = 4 * s
    w, h = spec.canvas_width, spec.canvas_height

    canvas = np.full((h, w, 3), 255, dtype=np.uint8)
    regions: list[GroundTruthRegion] = []

    x, y = margin, margin
    for word in spec.text.split():
        word_w = len(word) * cell_w - s  # last advance gap is not inked
        if x + word_w > w - margin and x > margin:
            x = margin
            y += line_h
        if y + glyph_h > h - margin:
            break  # canvas full; remaining words are dropped
        for k, ch in enumerate(word):
            gx = x + k * cell_w
            for row, line in enumerate(fontdata.glyph(ch)):
                for col, cell in enumerate(line):
                    if cell == "#":
                        y0 = y + row * s
                        x0 = gx + col * s
                        canvas[y0 : y0 + s, x0 : x0 + s] = 0
        regions.append(
            GroundTruthRegion(box=Box(x, y, x + word_w, y + glyph_h), text=word)
        )
        # inter-word gap wider than a glyph height, so default relative merge
        # thresholds keep words separate
        x += word_w + 2 * cell_w
    return canvas, regions


def _scale_box(b: Box, sx: float, sy: float) -> Box:
    return Box(b.x_min * sx, b.y_min * sy, b.x_max * sx, b.y_max * sy)


def _degrade(
    canvas: np.ndarray,
    lighting: LightingVariant,
    distance: DistanceVariant,
    resolution: ResolutionVariant,
    noise_sigma: float,
    rng: np.random.Generator,
) -> np.ndarray:
    img = canvas
    if distance.blur_sigma > 0:
        img = cv2.GaussianBlur(img, (0, 0), distance.blur_sigma)
    if distance.footprint_scale > 1:
        h, w = img.shape[:2]
        small = cv2.resize(
            img,
            (max(1, w // distance.footprint_scale), max(1, h // distance.footprint_scale)),
            interpolation=cv2.INTER_AREA,
        )
        img = cv2.resize(small, (w, h), interpolation=cv2.INTER_LINEAR)
    h, w = img.shape[:2]
    if (resolution.width, resolution.height) != (w, h):
        img = cv2.resize(img, (resolution.width, resolution.height), interpolation=cv2.INTER_AREA)
    out = img.astype(np.float64) * lighting.gain + lighting.offset
    if noise_sigma > 0:
        out = out + rng.normal(0.0, noise_sigma, size=out.shape)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


@dataclass
class ManifestEntry:
    """One manifest row: an image bound to its ground truth and conditions."""

    image_id: str
    image_path: Path
    regions: list[GroundTruthRegion]
    conditions: ConditionMetadata


def generate_synthetic(spec: SyntheticSpec, out_dir) -> Path:
    """Generate the condition grid into out_dir; returns the manifest path.

    Reproducible: the same spec and seed give byte-identical manifest and
    ground truth, pixel-identical images.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    canvas, base_regions = render_poster(spec)
    resolutions = spec.resolutions or (
        ResolutionVariant(spec.canvas_width, spec.canvas_height),
    )

    images = []
    index = 0
    for lighting in spec.lightings:
        for distance in spec.distances:
            for resolution in resolutions:
                rng = np.random.default_rng([spec.seed, index])
                img = _degrade(canvas, lighting, distance, resolution, spec.noise_sigma, rng)
                sx = resolution.width / spec.canvas_width
                sy = resolution.height / spec.canvas_height
                regions = [
                    GroundTruthRegion(box=_scale_box(r.box, sx, sy), text=r.text)
                    for r in base_regions
                ]
                image_id = (
                    f"{lighting.name.replace('+', '-')}_{distance.meters:g}m_"
                    f"{resolution.width}x{resolution.height}"
                )
                filename = f"{image_id}.png"
                save_image(out_dir / filename, img)
                images.append(
                    {
                        "id": image_id,
                        "image": filename,
                        "regions": [
                            {"box": list(r.box.as_tuple()), "text": r.text} for r in regions
                        ],
                        "conditions": ConditionMetadata(
                            lighting.name, distance.meters, resolution.width, resolution.height
                        ).to_dict(),
                    }
                )
                index += 1

    manifest_path = out_dir / "manifest.json"
    write_json(manifest_path, {"seed": spec.seed, "spec": spec.to_dict(), "images": images})
    return manifest_path


def load_manifest(path) -> list[ManifestEntry]:
    """Load a manifest into ordered entries ready for pipeline execution."""
    path = Path(path)
    raw = read_json(path)
    if not isinstance(raw, dict) or "images" not in raw:
        raise DataError(f"manifest must hold an 'images' list: {path}")
    entries: list[ManifestEntry] = []
    seen: dict[str, int] = {}
    for i, item in enumerate(raw["images"]):
        try:
            image_id = item.get("id") or item["image"]
            regions = [_region_from_dict(rd) for rd in item.get("regions", [])]
            conditions = ConditionMetadata.from_dict(item["conditions"])
        except (DataError, KeyError, TypeError) as e:
            raise DataError(f"manifest entry {i}: {e}") from e
        seen[image_id] = seen.get(image_id, 0) + 1
        entries.append(
            ManifestEntry(
                image_id=image_id,
                image_path=path.parent / item["image"],
                regions=regions,
                conditions=conditions,
            )
        )
    duplicates = sorted(k for k, n in seen.items() if n > 1)
    if duplicates:
        raise DataError(f"duplicate image ids in manifest: {', '.join(duplicates)}")
    return entries
