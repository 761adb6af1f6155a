import random

import numpy as np
import pytest

from egotext.dataset import GroundTruthRegion
from egotext.engines import CountingDetector, MockDetector, MockRecognizer, MockSpec
from egotext.fileio import DataError, atomic_write_text
from egotext.gaze import (
    DEFAULT_ROI_FRACTION,
    GazeError,
    GazeSample,
    RoiParams,
    align_gaze,
    gaze_run,
    gaze_window,
    load_frame_index,
    load_gaze_csv,
)
from egotext.geometry import Box, MergeParams

ABS_MERGE = MergeParams(2, 4, "absolute")


class TestRoiParams:
    def test_default_fraction(self):
        assert RoiParams().fraction == 1 / 16

    def test_invalid_fraction(self):
        with pytest.raises(GazeError):
            RoiParams(0.0)
        with pytest.raises(GazeError):
            RoiParams(1.5)


class TestLoadGazeCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "gaze.csv"
        atomic_write_text(
            path,
            "timestamp_ns,gaze_x_px,gaze_y_px\n100,10.5,20.5\n200,11.0,21.0\n",
        )
        samples = load_gaze_csv(path)
        assert samples == [GazeSample(100, 10.5, 20.5), GazeSample(200, 11.0, 21.0)]

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_gaze_csv(tmp_path / "nope.csv")

    def test_bad_header(self, tmp_path):
        path = tmp_path / "gaze.csv"
        atomic_write_text(path, "t,x,y\n1,2,3\n")
        with pytest.raises(DataError):
            load_gaze_csv(path)

    def test_non_numeric_row(self, tmp_path):
        path = tmp_path / "gaze.csv"
        atomic_write_text(path, "timestamp_ns,gaze_x_px,gaze_y_px\n1,oops,3\n")
        with pytest.raises(DataError, match="row 0"):
            load_gaze_csv(path)

    def test_unsorted_track_rejected(self, tmp_path):
        path = tmp_path / "gaze.csv"
        atomic_write_text(
            path, "timestamp_ns,gaze_x_px,gaze_y_px\n200,1,1\n100,2,2\n"
        )
        with pytest.raises(GazeError):
            load_gaze_csv(path)


class TestLoadFrameIndex:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "frames.csv"
        atomic_write_text(path, "frame_id,timestamp_ns,path\nf0,100,img/f0.png\n")
        assert load_frame_index(path) == [("f0", 100, "img/f0.png")]

    def test_bad_header(self, tmp_path):
        path = tmp_path / "frames.csv"
        atomic_write_text(path, "id,time\n1,2\n")
        with pytest.raises(DataError):
            load_frame_index(path)


class TestAlignGaze:
    TRACK = [GazeSample(100, 0, 0), GazeSample(200, 1, 1), GazeSample(300, 2, 2)]

    def test_exact_hits(self):
        out = align_gaze([("a", 100), ("b", 300)], self.TRACK, tolerance_ns=0)
        assert out == [("a", self.TRACK[0]), ("b", self.TRACK[2])]

    def test_nearest_within_tolerance(self):
        out = align_gaze([("a", 140)], self.TRACK, tolerance_ns=50)
        assert out == [("a", self.TRACK[0])]

    def test_outside_tolerance_is_none(self):
        out = align_gaze([("a", 1000)], self.TRACK, tolerance_ns=50)
        assert out == [("a", None)]

    def test_empty_track(self):
        assert align_gaze([("a", 100)], [], tolerance_ns=50) == [("a", None)]

    def test_nearest_of_two_neighbours(self):
        out = align_gaze([("a", 260)], self.TRACK, tolerance_ns=1000)
        assert out == [("a", self.TRACK[2])]


class TestGazeWindow:
    def test_default_side_2880(self):
        # 2880 / 16 = 180: the published glasses frame width.
        w = gaze_window(GazeSample(0, 1440, 800), 2880, 1700)
        assert w.width == 180
        assert w.height == 180

    def test_centred_when_interior(self):
        w = gaze_window(GazeSample(0, 1440, 850), 2880, 1700)
        assert (w.x_min + w.x_max) / 2 == 1440
        assert (w.y_min + w.y_max) / 2 == 850

    def test_clamped_at_corner(self):
        w = gaze_window(GazeSample(0, 0, 0), 2880, 1700)
        assert w == Box(0, 0, 180, 180)

    def test_clamped_at_far_edge(self):
        w = gaze_window(GazeSample(0, 2879, 1699), 2880, 1700)
        assert w == Box(2700, 1520, 2880, 1700)

    def test_never_leaves_frame_random(self):
        rng = random.Random(41)
        for _ in range(1000):
            fw = rng.randint(16, 3000)
            fh = rng.randint(16, 3000)
            g = GazeSample(0, rng.uniform(0, fw - 1), rng.uniform(0, fh - 1))
            w = gaze_window(g, fw, fh)
            side = max(1, round(fw * DEFAULT_ROI_FRACTION))
            assert w.x_min >= 0 and w.y_min >= 0
            assert w.x_max <= fw and w.y_max <= fh
            assert w.width == min(side, fw)
            assert w.height == min(side, fh)

    def test_tiny_frame(self):
        w = gaze_window(GazeSample(0, 3, 3), 8, 8)
        assert w.width == 1

    def test_invalid_frame(self):
        with pytest.raises(GazeError):
            gaze_window(GazeSample(0, 0, 0), 0, 10)


def _gt(x0, y0, x1, y1, text):
    return GroundTruthRegion(box=Box(x0, y0, x1, y1), text=text)


class TestGazeRun:
    def test_region_inside_window(self):
        # 1600-wide frame -> 100 px window; gaze at (200, 200).
        frame = np.zeros((900, 1600, 3), dtype=np.uint8)
        gt = [_gt(180, 190, 220, 205, "hello")]
        spec = MockSpec.from_regions(gt)
        out = gaze_run(
            frame,
            GazeSample(0, 200, 200),
            MockDetector(spec),
            ABS_MERGE,
            MockRecognizer(spec),
        )
        assert len(out) == 1
        assert out[0].text == "hello"
        assert out[0].box == gt[0].box
        assert not out[0].truncated

    def test_region_straddling_edge_truncated(self):
        frame = np.zeros((900, 1600, 3), dtype=np.uint8)
        # Window is [150, 250) x [150, 250); this box crosses its right edge.
        gt = [_gt(230, 190, 280, 205, "clipped")]
        spec = MockSpec.from_regions(gt)
        out = gaze_run(
            frame,
            GazeSample(0, 200, 200),
            MockDetector(spec),
            ABS_MERGE,
            MockRecognizer(spec),
        )
        assert len(out) == 1
        assert out[0].truncated
        assert out[0].box.x_max == 250

    def test_text_outside_window_invisible(self):
        frame = np.zeros((900, 1600, 3), dtype=np.uint8)
        spec = MockSpec.from_regions([_gt(1000, 600, 1100, 640, "far away")])
        out = gaze_run(
            frame,
            GazeSample(0, 200, 200),
            MockDetector(spec),
            ABS_MERGE,
            MockRecognizer(spec),
        )
        assert out == []

    def test_detector_sees_exactly_window_pixels(self):
        frame = np.zeros((900, 1600, 3), dtype=np.uint8)
        spec = MockSpec.from_regions([_gt(180, 190, 220, 205, "x")])
        counting = CountingDetector(MockDetector(spec))
        gaze_run(
            frame, GazeSample(0, 200, 200), counting, ABS_MERGE, MockRecognizer(spec)
        )
        assert counting.calls == 1
        assert counting.pixels_seen == 100 * 100

    def test_gaze_outside_frame_rejected(self):
        frame = np.zeros((100, 100, 3), dtype=np.uint8)
        spec = MockSpec()
        with pytest.raises(GazeError):
            gaze_run(
                frame,
                GazeSample(0, 150, 50),
                MockDetector(spec),
                ABS_MERGE,
                MockRecognizer(spec),
            )
