"""Recognition scoring (character error rate) and detection scoring (IoU-matched
precision/recall/F1), plus the per-image record type and its CSV schema.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from statistics import mean, median
from typing import Sequence

from .dataset import ConditionMetadata, GroundTruthRegion
from .fileio import DataError, atomic_write_text
from .geometry import Box, ScoredBox, iou
from .photometry import LightingStats


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class NormalizationPolicy:
    """Text normalization applied to both strings before scoring.

    Default: collapse whitespace runs to single spaces, trim the ends,
    preserve case.
    """

    collapse_whitespace: bool = True
    casefold: bool = False

    def apply(self, s: str) -> str:
        if self.collapse_whitespace:
            s = " ".join(s.split())
        if self.casefold:
            s = s.casefold()
        return s


DEFAULT_NORMALIZATION = NormalizationPolicy()


@dataclass(frozen=True)
class RecognitionEvalResult:
    """Edit-script counts against the ground truth: CER = (S + D + I) / N."""

    cer: float
    substitutions: int
    deletions: int
    insertions: int
    n_ground_truth: int


@dataclass(frozen=True)
class DetectionEvalResult:
    """IoU-thresholded match counts with derived precision/recall/F1.

    Counts are None for records rehydrated from a CSV that only carries the
    derived rates. precision_defined is False when there were no predictions
    (precision reported as 1.0 by convention).
    """

    precision: float
    recall: float
    f1: float
    tp: int | None = None
    fp: int | None = None
    fn: int | None = None
    precision_defined: bool = True


@dataclass
class EvalRecord:
    """One image's results joined with its conditions and lighting stats."""

    image_id: str
    conditions: ConditionMetadata | None = None
    lighting: LightingStats | None = None
    detection: DetectionEvalResult | None = None
    recognition: RecognitionEvalResult | None = None


# --------------------------------------------------------------------------
# character error rate
# --------------------------------------------------------------------------


def _edit_ops(a: str, b: str) -> tuple[int, int, int]:
    """(S, D, I) of a minimal unit-cost edit script turning reference a into b.

    Ties in the backtrace prefer substitution over insertion over deletion.
    """
    n, m = len(a), len(b)
    if a == b:
        return 0, 0, 0
    if n == 0:
        return 0, 0, m
    if m == 0:
        return 0, n, 0
    rows = [list(range(m + 1))]
    prev = rows[0]
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        ai = a[i - 1]
        for j in range(1, m + 1):
            sub = prev[j - 1] + (ai != b[j - 1])
            ins = cur[j - 1] + 1
            dele = prev[j] + 1
            if sub <= ins:
                cur[j] = sub if sub <= dele else dele
            else:
                cur[j] = ins if ins <= dele else dele
        rows.append(cur)
        prev = cur
    s_count = d_count = i_count = 0
    i, j = n, m
    while i > 0 and j > 0:
        here = rows[i][j]
        cost = a[i - 1] != b[j - 1]
        if here == rows[i - 1][j - 1] + cost:
            s_count += cost
            i -= 1
            j -= 1
        elif here == rows[i][j - 1] + 1:
            i_count += 1
            j -= 1
        else:
            d_count += 1
            i -= 1
    i_count += j
    d_count += i
    return s_count, d_count, i_count


def cer(
    ground_truth: str,
    predicted: str,
    norm: NormalizationPolicy = DEFAULT_NORMALIZATION,
) -> RecognitionEvalResult:
    """Character error rate via minimal edit script on normalized strings.

    N is the normalized ground-truth length. For empty ground truth the rate
    is 0 when the prediction is also empty, else the number of inserted
    characters (I / max(N, 1)). CER may exceed 1.0 for insertion-heavy
    predictions; it is reported unclamped.
    """
    gt = norm.apply(ground_truth)
    pred = norm.apply(predicted)
    n = len(gt)
    s, d, ins = _edit_ops(gt, pred)
    rate = (s + d + ins) / n if n > 0 else float(ins)
    return RecognitionEvalResult(
        cer=rate,
        substitutions=s,
        deletions=d,
        insertions=ins,
        n_ground_truth=n,
    )


# --------------------------------------------------------------------------
# detection matching
# --------------------------------------------------------------------------


def _pred_order_key(sb: ScoredBox):
    b = sb.box
    return (-sb.confidence, -b.area, b.x_min, b.y_min, b.x_max, b.y_max)


def _greedy_match(
    gt: Sequence[Box], pred: Sequence[ScoredBox], iou_threshold: float
) -> list[tuple[int, int, float]]:
    """Greedy confidence-ordered matching; returns (gt index, pred index, IoU) triples.

    Ground truth is visited in canonical coordinate order, so the result does
    not depend on how the GT list is permuted. A ground-truth box is consumed
    only by a match at or above the threshold.
    """
    gt_order = sorted(range(len(gt)), key=lambda i: (gt[i].y_min, gt[i].x_min, gt[i].x_max, gt[i].y_max))
    pred_order = sorted(range(len(pred)), key=lambda i: _pred_order_key(pred[i]))
    unmatched = set(gt_order)
    matches: list[tuple[int, int, float]] = []
    for pi in pred_order:
        best_iou = 0.0
        best_gi = None
        for gi in gt_order:
            if gi not in unmatched:
                continue
            v = iou(gt[gi], pred[pi].box)
            if v > best_iou:
                best_iou = v
                best_gi = gi
        if best_gi is not None and best_iou >= iou_threshold:
            unmatched.discard(best_gi)
            matches.append((best_gi, pi, best_iou))
    return matches


def match_detections(
    gt: Sequence[Box], pred: Sequence[ScoredBox], iou_threshold: float = 0.5
) -> DetectionEvalResult:
    """Score predictions against ground truth at the given IoU threshold.

    Conventions for the degenerate cases: with no predictions, precision is
    1.0 and flagged precision_defined=False; with no ground truth, recall is
    1.0.
    """
    if not (0.0 < iou_threshold <= 1.0):
        raise EvaluationError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    matches = _greedy_match(gt, pred, iou_threshold)
    tp = len(matches)
    fp = len(pred) - tp
    fn = len(gt) - tp
    precision_defined = len(pred) > 0
    precision = tp / (tp + fp) if precision_defined else 1.0
    recall = tp / (tp + fn) if gt else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return DetectionEvalResult(
        precision=precision,
        recall=recall,
        f1=f1,
        tp=tp,
        fp=fp,
        fn=fn,
        precision_defined=precision_defined,
    )


def score_regions(
    gt_regions: Sequence[GroundTruthRegion],
    predicted: Sequence,
    iou_threshold: float = 0.5,
    norm: NormalizationPolicy = DEFAULT_NORMALIZATION,
) -> tuple[DetectionEvalResult, RecognitionEvalResult]:
    """Joint detection and recognition score for one image.

    `predicted` holds objects with .box, .text and .confidence (pipeline
    TextRegions). Recognition pools edit operations over matched pairs in
    reading order (top-to-bottom, left-to-right by ground-truth box origin),
    plus a full-deletion penalty for every unmatched ground-truth region;
    unmatched predictions only count against detection.
    """
    gt_boxes = [r.box for r in gt_regions]
    pred_boxes = [ScoredBox(p.box, getattr(p, "confidence", 1.0)) for p in predicted]
    matches = _greedy_match(gt_boxes, pred_boxes, iou_threshold)
    tp = len(matches)
    fp = len(pred_boxes) - tp
    fn = len(gt_boxes) - tp
    precision_defined = len(pred_boxes) > 0
    precision = tp / (tp + fp) if precision_defined else 1.0
    recall = tp / (tp + fn) if gt_boxes else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    detection = DetectionEvalResult(
        precision=precision,
        recall=recall,
        f1=f1,
        tp=tp,
        fp=fp,
        fn=fn,
        precision_defined=precision_defined,
    )

    matched_gt = {gi for gi, _, _ in matches}
    reading_order = sorted(
        matches, key=lambda t: (gt_boxes[t[0]].y_min, gt_boxes[t[0]].x_min)
    )
    s_total = d_total = i_total = n_total = 0
    for gi, pi, _ in reading_order:
        pair = cer(gt_regions[gi].text, predicted[pi].text, norm)
        s_total += pair.substitutions
        d_total += pair.deletions
        i_total += pair.insertions
        n_total += pair.n_ground_truth
    for gi, region in enumerate(gt_regions):
        if gi not in matched_gt:
            missed = len(norm.apply(region.text))
            d_total += missed
            n_total += missed
    total = s_total + d_total + i_total
    rate = total / n_total if n_total > 0 else float(i_total)
    recognition = RecognitionEvalResult(
        cer=rate,
        substitutions=s_total,
        deletions=d_total,
        insertions=i_total,
        n_ground_truth=n_total,
    )
    return detection, recognition


# --------------------------------------------------------------------------
# aggregation
# --------------------------------------------------------------------------

_METRIC_GETTERS = {
    "precision": lambda r: r.detection.precision if r.detection else None,
    "recall": lambda r: r.detection.recall if r.detection else None,
    "f1": lambda r: r.detection.f1 if r.detection else None,
    "cer": lambda r: r.recognition.cer if r.recognition else None,
    "mean_brightness": lambda r: r.lighting.mean_brightness if r.lighting else None,
    "std_brightness": lambda r: r.lighting.std_brightness if r.lighting else None,
    "global_luminance": lambda r: r.lighting.global_luminance if r.lighting else None,
    "contrast": lambda r: r.lighting.contrast if r.lighting else None,
}


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    median: float
    count: int


@dataclass
class AggregateSummary:
    """Mean/median of each metric overall and per condition cell.

    pooled_cer is total edit operations over total ground-truth characters,
    reported alongside the mean of per-image CERs.
    """

    overall: dict[str, MetricSummary]
    pooled_cer: float | None
    groups: dict[tuple, dict[str, MetricSummary]]


def _group_key(record: EvalRecord) -> tuple:
    c = record.conditions
    if c is None:
        return ("", "", "")
    return (c.lighting, c.distance_m, f"{c.capture_width}x{c.capture_height}")


def _summarize(records: Sequence[EvalRecord]) -> dict[str, MetricSummary]:
    out: dict[str, MetricSummary] = {}
    for name, getter in _METRIC_GETTERS.items():
        values = [v for v in (getter(r) for r in records) if v is not None]
        if values:
            out[name] = MetricSummary(mean=mean(values), median=median(values), count=len(values))
    return out


def aggregate(records: Sequence[EvalRecord]) -> AggregateSummary:
    """Summarize records overall and grouped by (lighting, distance, resolution)."""
    if not records:
        raise EvaluationError("cannot aggregate an empty record list")
    edits = 0
    chars = 0
    for r in records:
        if r.recognition is not None:
            edits += r.recognition.substitutions + r.recognition.deletions + r.recognition.insertions
            chars += r.recognition.n_ground_truth
    pooled = edits / chars if chars > 0 else None
    groups: dict[tuple, list[EvalRecord]] = {}
    for r in records:
        groups.setdefault(_group_key(r), []).append(r)
    return AggregateSummary(
        overall=_summarize(records),
        pooled_cer=pooled,
        groups={k: _summarize(v) for k, v in sorted(groups.items(), key=lambda kv: str(kv[0]))},
    )


# --------------------------------------------------------------------------
# records CSV (per-image schema)
# --------------------------------------------------------------------------

CSV_COLUMNS = [
    "image_id",
    "lighting",
    "distance_m",
    "width",
    "height",
    "mean_brightness",
    "std_brightness",
    "global_luminance",
    "contrast",
    "precision",
    "recall",
    "f1",
    "cer",
    "S",
    "D",
    "I",
    "N",
]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def record_to_row(r: EvalRecord) -> dict[str, str]:
    c, l, d, rec = r.conditions, r.lighting, r.detection, r.recognition
    return {
        "image_id": r.image_id,
        "lighting": c.lighting if c else "",
        "distance_m": _fmt(c.distance_m if c else None),
        "width": _fmt(c.capture_width if c else None),
        "height": _fmt(c.capture_height if c else None),
        "mean_brightness": _fmt(l.mean_brightness if l else None),
        "std_brightness": _fmt(l.std_brightness if l else None),
        "global_luminance": _fmt(l.global_luminance if l else None),
        "contrast": _fmt(l.contrast if l else None),
        "precision": _fmt(d.precision if d else None),
        "recall": _fmt(d.recall if d else None),
        "f1": _fmt(d.f1 if d else None),
        "cer": _fmt(rec.cer if rec else None),
        "S": _fmt(rec.substitutions if rec else None),
        "D": _fmt(rec.deletions if rec else None),
        "I": _fmt(rec.insertions if rec else None),
        "N": _fmt(rec.n_ground_truth if rec else None),
    }


def write_records_csv(records: Sequence[EvalRecord], path) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow(record_to_row(r))
    atomic_write_text(path, buf.getvalue())


def _opt_float(row: dict, key: str) -> float | None:
    v = row.get(key, "")
    if v is None or v == "":
        return None
    return float(v)


def _opt_int(row: dict, key: str) -> int | None:
    v = row.get(key, "")
    if v is None or v == "":
        return None
    return int(float(v))


def read_records_csv(path) -> list[EvalRecord]:
    """Load a records CSV; blank cells become absent components."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file: {path}")
    records: list[EvalRecord] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or "image_id" not in reader.fieldnames:
            raise DataError(f"records CSV needs an image_id column: {path}")
        for row in reader:
            conditions = None
            if row.get("lighting"):
                conditions = ConditionMetadata(
                    lighting=row["lighting"],
                    distance_m=_opt_float(row, "distance_m") or 0.0,
                    capture_width=_opt_int(row, "width") or 0,
                    capture_height=_opt_int(row, "height") or 0,
                )
            lighting = None
            mb = _opt_float(row, "mean_brightness")
            if mb is not None:
                lighting = LightingStats(
                    mean_brightness=mb,
                    std_brightness=_opt_float(row, "std_brightness") or 0.0,
                    global_luminance=_opt_float(row, "global_luminance") or mb,
                    contrast=_opt_float(row, "contrast") or 0.0,
                )
            detection = None
            p = _opt_float(row, "precision")
            if p is not None:
                detection = DetectionEvalResult(
                    precision=p,
                    recall=_opt_float(row, "recall") or 0.0,
                    f1=_opt_float(row, "f1") or 0.0,
                )
            recognition = None
            c = _opt_float(row, "cer")
            if c is not None:
                recognition = RecognitionEvalResult(
                    cer=c,
                    substitutions=_opt_int(row, "S") or 0,
                    deletions=_opt_int(row, "D") or 0,
                    insertions=_opt_int(row, "I") or 0,
                    n_ground_truth=_opt_int(row, "N") or 0,
                )
            records.append(
                EvalRecord(
                    image_id=row["image_id"],
                    conditions=conditions,
                    lighting=lighting,
                    detection=detection,
                    recognition=recognition,
                )
            )
    return records
