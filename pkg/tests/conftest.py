import csv
import io
from pathlib import Path

import pytest

from egotext.dataset import SyntheticSpec, generate_synthetic, load_manifest
from egotext.fileio import atomic_write_text

# The 20-row published detection benchmark table used as a golden fixture:
# (image name, mean brightness, std brightness, global luminance, contrast,
# precision, recall, f1).
BENCHMARK_TABLE = [
    ("6_Book6_42_in_ni_w_53", 93.97, 58.34, 102.92, 255, 0.84, 0.63, 0.72),
    ("3_Book2_294_in_far_75", 88.07, 56.68, 122.26, 255, 0.83, 0.55, 0.66),
    ("5_Book6_44_in_ni_y_41", 81.02, 68.48, 94.93, 255, 0.91, 0.72, 0.81),
    ("4_Book6_52_out_42", 80.48, 53.09, 124.09, 255, 0.78, 0.59, 0.67),
    ("6_Book6_76_in_ni_w_2", 53.90, 38.51, 59.63, 255, 0.92, 0.70, 0.80),
    ("4_Book6_88_out_20", 82.98, 53.37, 128.06, 255, 0.82, 0.69, 0.75),
    ("4_Book6_50_out_87", 76.93, 50.94, 119.89, 255, 0.79, 0.61, 0.69),
    ("6_Book2_13_in_ni_w_2", 44.06, 29.15, 68.44, 240, 0.61, 0.42, 0.50),
    ("2_Book6_48_in_close_3", 50.82, 32.71, 73.71, 255, 0.96, 0.68, 0.80),
    ("6_Book2_274_in_ni_w_60", 99.85, 58.25, 138.32, 255, 0.88, 0.57, 0.69),
    ("3_Book6_30_in_far_2", 25.10, 20.05, 37.96, 194, 0.82, 0.33, 0.47),
    ("6_Book2_278_in_ni_w_3", 42.78, 30.34, 66.78, 252, 0.87, 0.70, 0.77),
    ("3_Book6_68_in_far_2", 25.52, 19.61, 38.64, 190, 0.86, 0.14, 0.24),
    ("4_Book6_106_out_86", 86.19, 54.77, 133.69, 245, 0.83, 0.65, 0.73),
    ("5_Book6_46_in_ni_y_4", 27.17, 30.55, 34.25, 183, 0.86, 0.67, 0.75),
    ("6_Book2_292_in_ni_w_3", 43.94, 29.87, 68.56, 251, 0.95, 0.77, 0.85),
    ("6_Book2_268_in_ni_w_2", 43.80, 29.82, 68.42, 251, 0.79, 0.54, 0.64),
    ("6_Book2_290_in_ni_w_3", 44.10, 30.38, 68.76, 253, 0.93, 0.73, 0.81),
    ("6_Book2_57_in_ni_w_1", 61.55, 39.67, 92.55, 253, 0.52, 0.38, 0.44),
    ("4_Book2_73_out_18", 92.63, 55.80, 132.72, 251, 0.79, 0.56, 0.66),
]


def benchmark_table_csv_text() -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
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
    )
    for name, mb, sb, gl, con, p, r, f1 in BENCHMARK_TABLE:
        writer.writerow([name, "", "", "", "", mb, sb, gl, con, p, r, f1, "", "", "", "", ""])
    return buf.getvalue()


@pytest.fixture(scope="session")
def benchmark_csv(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("table") / "benchmark.csv"
    atomic_write_text(path, benchmark_table_csv_text())
    return path


# (criterion name, "PASS" | "FAIL" | "SKIP") tuples collected by
# test_acceptance.py; printed as a summary block at the end of the run.
ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{status}] {name}")


@pytest.fixture(scope="session")
def synthetic_dataset(tmp_path_factory):
    """The 4x2x2 synthetic condition grid plus its loaded manifest entries."""
    out = tmp_path_factory.mktemp("synth")
    manifest = generate_synthetic(SyntheticSpec.study_axes(canvas=512), out)
    return manifest, load_manifest(manifest)
