"""Toolkit for pixel-grounded video conversation benchmarks.

Covers the full loop around a grounded video conversation model without
hosting one: bit-exact mask run-length codecs, the three grounded-caption
tag dialects, scoring for grounded conversation generation (mIoU, Recall,
METEOR, CIDEr, CLAIR), referring video segmentation (J, F, J&F), and
mask-box visual grounding, plus the three-stream semi-automatic
annotation pipeline with caching and human review.
"""

from . import captions, dataset, gcg, masks, pipeline, services, textmetrics, tracks, vos  # noqa: F401
from .captions import Dialect, GroundedCaption, PhraseSpan, SegBinding, parse, serialize, strip_tags  # noqa: F401
from .dataset import (  # noqa: F401
    DatasetStats,
    GcgSample,
    ObjectAnnotation,
    VideoRef,
    load_dataset,
    sample_segmentwise,
    save_dataset,
    stats,
)
from .gcg import ScoreReport, match_objects, score_gcg  # noqa: F401
from .masks import (  # noqa: F401
    BoundingBox,
    RleMask,
    boundary_f,
    boundary_map,
    box_iou,
    iou,
    mask_bbox,
    rle_decode,
    rle_encode,
    rle_from_string,
    rle_to_string,
)
from .tracks import MaskTrack, track_iou  # noqa: F401
from .vos import VosScore, f_measure, grounding_miou, j_measure, score_vos  # noqa: F401

__version__ = "0.1.0"
