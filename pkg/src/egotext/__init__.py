"""Benchmark harness for scene text detection and recognition on egocentric
imagery: box merging, photometric metrics, preprocessing, CER/IoU scoring,
condition-correlation analysis, gaze-windowed processing, and a synthetic
condition-grid generator.
"""

__version__ = "0.1.0"

from .geometry import Box, MergeParams, ScoredBox, envelope, iou, merge_boxes
from .photometry import LightingStats, lighting_stats
from .evaluation import cer, match_detections, score_regions

__all__ = [
    "Box",
    "ScoredBox",
    "MergeParams",
    "iou",
    "envelope",
    "merge_boxes",
    "LightingStats",
    "lighting_stats",
    "cer",
    "match_detections",
    "score_regions",
    "__version__",
]
