"""Correlation analysis between conditions and error metrics, grouped
summaries, and report emission (CSVs, Markdown, plots).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from statistics import mean, median
from typing import Callable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .evaluation import AggregateSummary, EvalRecord, aggregate, write_records_csv
from .fileio import atomic_write_bytes, atomic_write_text


class AnalysisError(ValueError):
    pass


# CER figures reported by the original full-scale study. They depend on its
# proprietary dataset and specific pretrained models, so they are reference
# context for reports only -- never test expectations for this harness.
REFERENCE_FULL_SCALE = {
    "east_crnn_cer": 0.65,
    "east_pytesseract_cer": 0.82,
    "east_crnn_upscaled_cer": 0.48,
    "east_crnn_brightness_enhanced_cer": 0.67,
    "detection_mean_precision": 0.82,
    "detection_mean_recall": 0.50,
    "detection_mean_f1": 0.67,
}

_SELECTORS: dict[str, Callable[[EvalRecord], float | None]] = {
    "mean_brightness": lambda r: r.lighting.mean_brightness if r.lighting else None,
    "std_brightness": lambda r: r.lighting.std_brightness if r.lighting else None,
    "global_luminance": lambda r: r.lighting.global_luminance if r.lighting else None,
    "contrast": lambda r: r.lighting.contrast if r.lighting else None,
    "precision": lambda r: r.detection.precision if r.detection else None,
    "recall": lambda r: r.detection.recall if r.detection else None,
    "f1": lambda r: r.detection.f1 if r.detection else None,
    "one_minus_f1": lambda r: 1.0 - r.detection.f1 if r.detection else None,
    "cer": lambda r: r.recognition.cer if r.recognition else None,
    "distance_m": lambda r: r.conditions.distance_m if r.conditions else None,
    "width": lambda r: float(r.conditions.capture_width) if r.conditions else None,
    "height": lambda r: float(r.conditions.capture_height) if r.conditions else None,
}

# The correlation study's variable set: the four lighting metrics plus the
# error-rate columns (both the detection- and the recognition-derived one).
DEFAULT_VARIABLES = (
    "mean_brightness",
    "std_brightness",
    "global_luminance",
    "contrast",
    "one_minus_f1",
    "cer",
)


def metric_values(records: Sequence[EvalRecord], variable: str) -> list[float | None]:
    if variable not in _SELECTORS:
        raise AnalysisError(f"unknown metric selector: {variable!r}")
    return [_SELECTORS[variable](r) for r in records]


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(x) != len(y):
        raise AnalysisError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise AnalysisError("need at least two samples")
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        raise AnalysisError("undefined correlation: zero variance")
    r = float((dx * dy).sum() / (sx * sy))
    return max(-1.0, min(1.0, r))


@dataclass
class CorrelationMatrix:
    """Pairwise Pearson r over the selected metric columns.

    Undefined entries (a constant column, or fewer than two paired samples)
    are NaN in ``matrix`` with defined=False; they are surfaced explicitly,
    never silently reported as 0. counts holds the pairwise sample count
    after dropping records missing either value.
    """

    variables: tuple[str, ...]
    matrix: np.ndarray
    counts: np.ndarray
    defined: np.ndarray
    sample_count: int

    def value(self, a: str, b: str) -> float:
        i, j = self.variables.index(a), self.variables.index(b)
        return float(self.matrix[i, j])


def correlation_matrix(
    records: Sequence[EvalRecord], variables: Sequence[str] = DEFAULT_VARIABLES
) -> CorrelationMatrix:
    """Pairwise Pearson correlation with pairwise deletion of missing values."""
    if len(records) < 2:
        raise AnalysisError("need at least two records")
    names = tuple(variables)
    columns = [metric_values(records, v) for v in names]
    n = len(names)
    matrix = np.full((n, n), np.nan)
    counts = np.zeros((n, n), dtype=int)
    defined = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i, n):
            paired = [
                (a, b)
                for a, b in zip(columns[i], columns[j])
                if a is not None and b is not None
            ]
            counts[i, j] = counts[j, i] = len(paired)
            if len(paired) < 2:
                continue
            xs = [p[0] for p in paired]
            ys = [p[1] for p in paired]
            try:
                r = pearson(xs, ys)
            except AnalysisError:
                continue  # zero-variance column: left undefined
            matrix[i, j] = matrix[j, i] = r
            defined[i, j] = defined[j, i] = True
    return CorrelationMatrix(
        variables=names,
        matrix=matrix,
        counts=counts,
        defined=defined,
        sample_count=len(records),
    )


def condition_summary(records: Sequence[EvalRecord]) -> list[dict]:
    """Mean/median CER and F1 per (lighting x distance x resolution) cell.

    Records without condition metadata are skipped; cells with zero records
    simply do not appear.
    """
    cells: dict[tuple, list[EvalRecord]] = {}
    for r in records:
        if r.conditions is None:
            continue
        key = (
            r.conditions.lighting,
            r.conditions.distance_m,
            f"{r.conditions.capture_width}x{r.conditions.capture_height}",
        )
        cells.setdefault(key, []).append(r)
    rows: list[dict] = []
    for key in sorted(cells, key=str):
        members = cells[key]
        cers = [r.recognition.cer for r in members if r.recognition]
        f1s = [r.detection.f1 for r in members if r.detection]
        rows.append(
            {
                "lighting": key[0],
                "distance_m": key[1],
                "resolution": key[2],
                "count": len(members),
                "mean_cer": mean(cers) if cers else None,
                "median_cer": median(cers) if cers else None,
                "mean_f1": mean(f1s) if f1s else None,
                "median_f1": median(f1s) if f1s else None,
            }
        )
    return rows


# --------------------------------------------------------------------------
# report emission
# --------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "undefined"
        return repr(v)
    return str(v)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _write_corr_csv(matrix: CorrelationMatrix, path: Path) -> None:
    rows = [
        [var, *matrix.matrix[i]]
        for i, var in enumerate(matrix.variables)
    ]
    atomic_write_text(path, _csv_text(["variable", *matrix.variables], rows))


def _write_summary_csv(rows: list[dict], path: Path) -> None:
    header = [
        "lighting",
        "distance_m",
        "resolution",
        "count",
        "mean_cer",
        "median_cer",
        "mean_f1",
        "median_f1",
    ]
    atomic_write_text(path, _csv_text(header, [[r[h] for h in header] for r in rows]))


def _heatmap(matrix: CorrelationMatrix, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(1.1 * len(matrix.variables) + 2, 1.0 * len(matrix.variables) + 1.5))
    im = ax.imshow(matrix.matrix, vmin=-1, vmax=1, cmap="coolwarm")
    ax.set_xticks(range(len(matrix.variables)), matrix.variables, rotation=45, ha="right")
    ax.set_yticks(range(len(matrix.variables)), matrix.variables)
    for i in range(len(matrix.variables)):
        for j in range(len(matrix.variables)):
            v = matrix.matrix[i, j]
            ax.text(
                j,
                i,
                "n/a" if math.isnan(v) else f"{v:.2f}",
                ha="center",
                va="center",
                fontsize=8,
            )
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    _save_fig(fig, path)


def _bars(rows: list[dict], metric: str, path: Path) -> None:
    labels = [f"{r['lighting']}\n{r['distance_m']}m {r['resolution']}" for r in rows]
    values = [r[metric] if r[metric] is not None else 0.0 for r in rows]
    fig, ax = plt.subplots(figsize=(max(6, 0.8 * len(rows)), 4))
    ax.bar(range(len(rows)), values, color="#4878a8")
    ax.set_xticks(range(len(rows)), labels, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel(metric)
    fig.tight_layout()
    _save_fig(fig, path)


def _save_fig(fig, path: Path) -> None:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=110)
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())


def _report_md(
    records: Sequence[EvalRecord],
    summary: AggregateSummary | None,
    matrix: CorrelationMatrix | None,
    cells: list[dict],
) -> str:
    lines = ["# Scene text benchmark report", ""]
    lines.append(f"Records: {len(records)}")
    lines.append("")
    lines.append("## Overall metrics")
    if summary is None or not summary.overall:
        lines.append("")
        lines.append("no data")
    else:
        lines.append("")
        lines.append("| metric | mean | median | n |")
        lines.append("|---|---|---|---|")
        for name, ms in sorted(summary.overall.items()):
            lines.append(f"| {name} | {ms.mean:.4f} | {ms.median:.4f} | {ms.count} |")
        if summary.pooled_cer is not None:
            lines.append("")
            lines.append(
                f"Pooled-character CER (total edits / total ground-truth chars): "
                f"{summary.pooled_cer:.4f}"
            )
    lines.append("")
    lines.append("## Correlation matrix")
    if matrix is None:
        lines.append("")
        lines.append("no data")
    else:
        lines.append("")
        lines.append("| | " + " | ".join(matrix.variables) + " |")
        lines.append("|---" * (len(matrix.variables) + 1) + "|")
        for i, var in enumerate(matrix.variables):
            cellvals = [
                "undefined" if math.isnan(matrix.matrix[i, j]) else f"{matrix.matrix[i, j]:.3f}"
                for j in range(len(matrix.variables))
            ]
            lines.append(f"| {var} | " + " | ".join(cellvals) + " |")
    lines.append("")
    lines.append("## Condition cells")
    if not cells:
        lines.append("")
        lines.append("no data")
    else:
        lines.append("")
        lines.append("| lighting | distance | resolution | n | mean CER | mean F1 |")
        lines.append("|---|---|---|---|---|---|")
        for r in cells:
            mc = "" if r["mean_cer"] is None else f"{r['mean_cer']:.4f}"
            mf = "" if r["mean_f1"] is None else f"{r['mean_f1']:.4f}"
            lines.append(
                f"| {r['lighting']} | {r['distance_m']} | {r['resolution']} | "
                f"{r['count']} | {mc} | {mf} |"
            )
    lines.append("")
    lines.append("## Reference values (original full-scale study)")
    lines.append("")
    lines.append(
        "The following headline figures come from the original full-scale study "
        "on its proprietary dataset and specific pretrained engines. They are "
        "not reproducible at desk scale and are listed for context only; this "
        "harness never uses them as expectations."
    )
    lines.append("")
    lines.append("| reference | value |")
    lines.append("|---|---|")
    for name, value in REFERENCE_FULL_SCALE.items():
        lines.append(f"| {name} | {value} |")
    lines.append("")
    return "\n".join(lines)


def emit_report(
    records: Sequence[EvalRecord],
    out_dir,
    variables: Sequence[str] = DEFAULT_VARIABLES,
) -> list[Path]:
    """Write per-image CSV, correlation CSV, condition summary CSV, Markdown
    report and plots into out_dir. Empty inputs still produce a report with
    'no data' sections. Returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    per_image = out_dir / "per_image.csv"
    write_records_csv(records, per_image)
    written.append(per_image)

    matrix = None
    if len(records) >= 2:
        matrix = correlation_matrix(records, variables)
        corr_path = out_dir / "correlation_matrix.csv"
        _write_corr_csv(matrix, corr_path)
        written.append(corr_path)
        heat_path = out_dir / "correlation_heatmap.png"
        _heatmap(matrix, heat_path)
        written.append(heat_path)

    cells = condition_summary(records)
    cells_path = out_dir / "condition_summary.csv"
    _write_summary_csv(cells, cells_path)
    written.append(cells_path)
    if cells:
        for metric, fname in (("mean_cer", "cer_by_condition.png"), ("mean_f1", "f1_by_condition.png")):
            if any(r[metric] is not None for r in cells):
                p = out_dir / fname
                _bars(cells, metric, p)
                written.append(p)

    summary = aggregate(records) if records else None
    report_path = out_dir / "report.md"
    atomic_write_text(report_path, _report_md(records, summary, matrix, cells))
    written.append(report_path)
    return written
