"""Command-line surface for reproducible experiment runs.

Subcommands: synth (generate the synthetic dataset), stats (photometry over
a manifest), run (detect -> merge -> recognize -> score), gaze-run
(gaze-windowed pipeline over a frame stream), analyze (correlation +
condition summaries + report).

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 engine
unavailable. Schema/config failures emit a machine-readable JSON object on
stderr. Partial per-image failures are recorded in the output and reported
as a warning count with exit 0.
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from . import __version__
from .adapters import EastDetector, EasyOcrRecognizer, EngineConfig, TesseractRecognizer
from .analysis import emit_report
from .dataset import (
    GroundTruthRegion,
    ManifestEntry,
    SyntheticSpec,
    generate_synthetic,
    load_ground_truth,
    load_manifest,
)
from .engines import (
    EngineUnavailableError,
    MockDetector,
    MockRecognizer,
    MockSpec,
    run_pipeline,
)
from .evaluation import (
    EvalRecord,
    NormalizationPolicy,
    read_records_csv,
    score_regions,
    write_records_csv,
)
from .fileio import DataError, load_image, read_json, write_json
from .gaze import (
    RoiParams,
    align_gaze,
    gaze_run,
    load_frame_index,
    load_gaze_csv,
)
from .geometry import GeometryError, MergeParams
from .photometry import lighting_stats
from .preprocess import PreprocessingChain

DEFAULT_SEED = 20240101
DEFAULT_FRAME_RATE = 20.0

# spec'd exit codes take precedence over click's default of 2 for usage errors
click.UsageError.exit_code = 1


class ConfigError(ValueError):
    pass


def _fail(code: int, kind: str, message: str):
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": message}}) + "\n")
    sys.exit(code)


def _guard(fn):
    """Map domain exceptions onto the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as e:
            _fail(1, "config", str(e))
        except (DataError, GeometryError) as e:
            _fail(2, "data", str(e))
        except EngineUnavailableError as e:
            _fail(3, "engine", str(e))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# --------------------------------------------------------------------------
# run configuration
# --------------------------------------------------------------------------


@dataclass
class RunConfig:
    seed: int = DEFAULT_SEED
    iou_threshold: float = 0.5
    padding: float = 0.0
    merge: MergeParams = field(default_factory=MergeParams)
    preprocess: PreprocessingChain = field(default_factory=PreprocessingChain)
    normalization: NormalizationPolicy = field(default_factory=NormalizationPolicy)
    detector: dict = field(default_factory=lambda: {"name": "mock"})
    recognizer: dict = field(default_factory=lambda: {"name": "mock"})
    roi_fraction: float = 1.0 / 16.0
    frame_rate: float = DEFAULT_FRAME_RATE
    gaze_tolerance_ns: int | None = None
    raw: dict = field(default_factory=dict)


def _load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        d = read_json(path)
    except DataError as e:
        raise ConfigError(str(e)) from e
    if not isinstance(d, dict):
        raise ConfigError(f"config must be a JSON object: {path}")
    try:
        merge_d = d.get("merge", {})
        merge = MergeParams(
            epsilon_y=float(merge_d.get("epsilon_y", 0.5)),
            epsilon_x=float(merge_d.get("epsilon_x", 1.0)),
            mode=merge_d.get("mode", "relative-to-median-height"),
        )
        pre_d = d.get("preprocess", {})
        bright = pre_d.get("brightness", {})
        gate = bright.get("threshold", 60.0)
        preprocess = PreprocessingChain(
            upscale_factor=int(pre_d.get("upscale_factor", 1)),
            interpolation=pre_d.get("interpolation", "bicubic"),
            brightness_enabled=bool(bright.get("enabled", False)),
            brightness_gain=float(bright.get("gain", 1.0)),
            brightness_offset=float(bright.get("offset", 0.0)),
            gate_threshold=None if gate is None else float(gate),
        )
        norm_d = d.get("normalization", {})
        normalization = NormalizationPolicy(
            collapse_whitespace=bool(norm_d.get("collapse_whitespace", True)),
            casefold=bool(norm_d.get("casefold", False)),
        )
        tolerance = d.get("gaze_tolerance_ns")
        return RunConfig(
            seed=int(d.get("seed", DEFAULT_SEED)),
            iou_threshold=float(d.get("iou_threshold", 0.5)),
            padding=float(d.get("padding", 0.0)),
            merge=merge,
            preprocess=preprocess,
            normalization=normalization,
            detector=d.get("detector", {"name": "mock"}),
            recognizer=d.get("recognizer", {"name": "mock"}),
            roi_fraction=float(d.get("roi", {}).get("fraction", 1.0 / 16.0)),
            frame_rate=float(d.get("frame_rate", DEFAULT_FRAME_RATE)),
            gaze_tolerance_ns=None if tolerance is None else int(tolerance),
            raw=d,
        )
    except (GeometryError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid config {path}: {e}") from e


def _mock_spec(engine_cfg: dict, cfg: RunConfig, entries: list[ManifestEntry] | None) -> MockSpec:
    regions: dict[str, tuple[GroundTruthRegion, ...]] = {}
    gt_path = engine_cfg.get("ground_truth")
    if gt_path:
        gt_entries, errors = load_ground_truth(gt_path)
        if errors:
            raise DataError("; ".join(errors))
        regions = {e.image: tuple(e.regions) for e in gt_entries}
    elif entries is not None:
        regions = {e.image_id: tuple(e.regions) for e in entries}
    return MockSpec(
        regions=regions,
        drop_rate=float(engine_cfg.get("drop_rate", 0.0)),
        jitter_px=float(engine_cfg.get("jitter_px", 0.0)),
        char_error_rate=float(engine_cfg.get("char_error_rate", 0.0)),
        seed=int(engine_cfg.get("seed", cfg.seed)),
    )


def _build_detector(cfg: RunConfig, entries: list[ManifestEntry] | None):
    name = cfg.detector.get("name", "mock")
    if name == "mock":
        return MockDetector(_mock_spec(cfg.detector, cfg, entries))
    if name == "east":
        return EastDetector(
            EngineConfig(
                name="east",
                model_path=cfg.detector.get("model_path", ""),
                score_threshold=float(cfg.detector.get("score_threshold", 0.5)),
                nms_threshold=float(cfg.detector.get("nms_threshold", 0.4)),
                device=cfg.detector.get("device", ""),
            )
        )
    raise ConfigError(f"unknown detector: {name!r}")


def _build_recognizer(cfg: RunConfig, entries: list[ManifestEntry] | None):
    name = cfg.recognizer.get("name", "mock")
    if name == "mock":
        return MockRecognizer(_mock_spec(cfg.recognizer, cfg, entries))
    if name == "tesseract":
        return TesseractRecognizer()
    if name == "easyocr":
        return EasyOcrRecognizer()
    raise ConfigError(f"unknown recognizer: {name!r}")


def _run_manifest_json(command: str, cfg: RunConfig, detector, recognizer, inputs: dict) -> dict:
    return {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.raw or None,
        "detector": detector.name if detector else None,
        "recognizer": recognizer.name if recognizer else None,
        "iou_threshold": cfg.iou_threshold,
        "inputs": inputs,
    }


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


@click.group()
@click.version_option(version=__version__)
def main():
    """Benchmark harness for scene text detection and recognition on
    egocentric imagery."""


@main.command()
@click.option("--spec", "spec_path", type=click.Path(), default=None, help="Synthetic spec JSON; defaults to the 4x2x2 study grid.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@_guard
def synth(spec_path, out_dir):
    """Generate the synthetic poster dataset."""
    if spec_path is None:
        spec = SyntheticSpec.study_axes()
    else:
        spec = SyntheticSpec.from_dict(read_json(spec_path))
    manifest = generate_synthetic(spec, out_dir)
    click.echo(f"wrote {manifest}")


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), required=True)
@click.option("--out", "out_csv", type=click.Path(), required=True)
@_guard
def stats(manifest_path, out_csv):
    """Photometry metrics for every image in a manifest."""
    entries = load_manifest(manifest_path)
    records = []
    for e in entries:
        img = load_image(e.image_path)
        records.append(
            EvalRecord(image_id=e.image_id, conditions=e.conditions, lighting=lighting_stats(img))
        )
    write_records_csv(records, out_csv)
    click.echo(f"wrote {out_csv} ({len(records)} rows)")


def _process_entry(entry: ManifestEntry, cfg: RunConfig, detector, recognizer):
    img = load_image(entry.image_path)
    stats_ = lighting_stats(img)
    regions = run_pipeline(
        img,
        detector,
        cfg.merge,
        recognizer,
        preproc=cfg.preprocess,
        image_id=entry.image_id,
        padding=cfg.padding,
    )
    detection, recognition = score_regions(
        entry.regions, regions, cfg.iou_threshold, cfg.normalization
    )
    return EvalRecord(
        image_id=entry.image_id,
        conditions=entry.conditions,
        lighting=stats_,
        detection=detection,
        recognition=recognition,
    )


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--jobs", type=int, default=os.cpu_count, show_default="number of processors")
@_guard
def run(manifest_path, config_path, out_dir, jobs):
    """Full detect -> merge -> recognize -> score pipeline over a manifest."""
    cfg = _load_config(config_path)
    entries = load_manifest(manifest_path)
    detector = _build_detector(cfg, entries)
    recognizer = _build_recognizer(cfg, entries)
    if not (detector.reentrant and recognizer.reentrant):
        jobs = 1
    jobs = max(1, jobs or 1)

    warnings: list[str] = []
    records: list[EvalRecord] = []

    def worker(entry: ManifestEntry):
        try:
            return entry, _process_entry(entry, cfg, detector, recognizer), None
        except EngineUnavailableError:
            raise
        except Exception as e:  # per-image failure degrades, never aborts
            return entry, None, f"{entry.image_id}: {e}"

    if jobs == 1:
        results = [worker(e) for e in entries]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(worker, entries))

    for entry, record, warning in results:  # manifest order regardless of completion order
        if warning is not None:
            warnings.append(warning)
            records.append(EvalRecord(image_id=entry.image_id, conditions=entry.conditions))
        else:
            records.append(record)

    out_dir = Path(out_dir)
    write_records_csv(records, out_dir / "records.csv")
    write_json(
        out_dir / "run.json",
        {
            **_run_manifest_json("run", cfg, detector, recognizer, {"manifest": str(manifest_path)}),
            "images": len(entries),
            "warnings": warnings,
        },
    )
    click.echo(f"wrote {out_dir / 'records.csv'} ({len(records)} rows, {len(warnings)} warnings)")


def _frames_from_source(frames_path: Path, frame_rate: float):
    """Yield (frame_id, timestamp_ns, image) from a frame directory or video."""
    if frames_path.is_dir():
        index_path = frames_path / "frames.csv"
        for frame_id, t, rel in load_frame_index(index_path):
            yield frame_id, t, load_image(frames_path / rel)
    else:
        import cv2

        cap = cv2.VideoCapture(str(frames_path))
        if not cap.isOpened():
            raise DataError(f"cannot open video: {frames_path}")
        interval_ns = int(1e9 / frame_rate)
        i = 0
        while True:
            ok, frame = cap.read()
            if not ok:
                break
            yield f"frame_{i:06d}", i * interval_ns, cv2.cvtColor(frame, cv2.COLOR_BGR2RGB)
            i += 1
        cap.release()


@main.command("gaze-run")
@click.option("--frames", "frames_path", type=click.Path(), required=True, help="Image-sequence directory (with frames.csv) or a video file.")
@click.option("--gaze", "gaze_path", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@_guard
def gaze_run_cmd(frames_path, gaze_path, config_path, out_dir):
    """Gaze-windowed pipeline over a frame stream."""
    cfg = _load_config(config_path)
    track = load_gaze_csv(gaze_path)
    detector = _build_detector(cfg, None)
    recognizer = _build_recognizer(cfg, None)
    roi = RoiParams(fraction=cfg.roi_fraction)
    tolerance = cfg.gaze_tolerance_ns
    if tolerance is None:
        tolerance = int(0.5e9 / cfg.frame_rate)

    frames = list(_frames_from_source(Path(frames_path), cfg.frame_rate))
    aligned = align_gaze([(fid, t) for fid, t, _ in frames], track, tolerance)

    rows = ["frame_id,x_min,y_min,x_max,y_max,text,confidence,truncated,error"]
    warnings = []
    n_regions = 0
    for (fid, _, img), (_, sample) in zip(frames, aligned):
        if sample is None:
            warnings.append(f"{fid}: no gaze sample within tolerance")
            continue
        regions = gaze_run(
            img,
            sample,
            detector,
            cfg.merge,
            recognizer,
            params=roi,
            preproc=cfg.preprocess,
            image_id=fid,
            padding=cfg.padding,
        )
        for r in regions:
            text = r.text.replace('"', '""')
            rows.append(
                f'{fid},{r.box.x_min!r},{r.box.y_min!r},{r.box.x_max!r},{r.box.y_max!r},'
                f'"{text}",{r.confidence!r},{int(r.truncated)},{int(r.error)}'
            )
            n_regions += 1

    out_dir = Path(out_dir)
    from .fileio import atomic_write_text

    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "regions.csv", "\n".join(rows) + "\n")
    write_json(
        out_dir / "run.json",
        {
            **_run_manifest_json(
                "gaze-run", cfg, detector, recognizer,
                {"frames": str(frames_path), "gaze": str(gaze_path)},
            ),
            "frames": len(frames),
            "regions": n_regions,
            "warnings": warnings,
        },
    )
    click.echo(
        f"wrote {out_dir / 'regions.csv'} ({n_regions} regions, {len(warnings)} warnings)"
    )


@main.command()
@click.option("--records", "records_path", type=click.Path(), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@_guard
def analyze(records_path, out_dir):
    """Correlation matrix, condition summary and report from a records CSV."""
    records = read_records_csv(records_path)
    written = emit_report(records, out_dir)
    click.echo(f"wrote {len(written)} files to {out_dir}")


if __name__ == "__main__":
    main()
