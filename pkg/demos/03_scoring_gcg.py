"""
Scoring grounded conversation generation
========================================

Builds a tiny ground-truth dataset, drops one object from the
predictions and perturbs another, then scores: optimal object matching
on volumetric track IoU, mIoU / Recall over the assignment, and METEOR /
CIDEr over the tag-stripped captions.
"""
import tempfile
from pathlib import Path

import numpy as np

from videoground import (
    Dialect,
    GcgSample,
    MaskTrack,
    ObjectAnnotation,
    VideoRef,
    parse,
    rle_encode,
    save_dataset,
    score_gcg,
)

print("Scoring grounded conversation generation")
print("=" * 40)


def block(y0, y1, x0, x1):
    m = np.zeros((8, 8), dtype=bool)
    m[y0:y1, x0:x1] = True
    return m


def track(*masks):
    return MaskTrack({i: rle_encode(m) for i, m in enumerate(masks)})


def sample(sample_id, answer_text, objects):
    return GcgSample(
        sample_id=sample_id,
        video=VideoRef("demo", sample_id, 2, 8, 8),
        question="What is happening in this video?",
        answer=parse(answer_text, Dialect.ID_SEG),
        objects=objects,
    )

###############################################################################
# Ground truth: two clips, three objects in total.

gt = [
    sample(
        "clip-0",
        "a <p> red ball </p> [SEG:0] rolls toward a <p> sleeping cat </p> [SEG:1]",
        {
            0: ObjectAnnotation("ball", track(block(0, 2, 0, 2), block(1, 3, 1, 3))),
            1: ObjectAnnotation("cat", track(block(4, 7, 4, 7), block(4, 7, 4, 7))),
        },
    ),
    sample(
        "clip-1",
        "a <p> cyclist </p> [SEG:0] rides across the street",
        {0: ObjectAnnotation("cyclist", track(block(2, 5, 0, 3), block(2, 5, 3, 6)))},
    ),
]

###############################################################################
# Predictions: the ball is found slightly offset, the cat is missed
# entirely, the cyclist is perfect.

pred = [
    sample(
        "clip-0",
        "a <p> red ball </p> [SEG:0] rolls along the floor",
        {0: ObjectAnnotation("ball", track(block(0, 2, 0, 2), block(1, 3, 2, 4)))},
    ),
    sample(
        "clip-1",
        "a <p> cyclist </p> [SEG:0] rides across the street",
        {0: ObjectAnnotation("cyclist", track(block(2, 5, 0, 3), block(2, 5, 3, 6)))},
    ),
]

with tempfile.TemporaryDirectory() as tmp:
    gt_path = Path(tmp) / "gt.jsonl"
    pred_path = Path(tmp) / "pred.jsonl"
    save_dataset(gt, gt_path)
    save_dataset(pred, pred_path)

    report = score_gcg(pred_path, gt_path)

print(report.human_table())
print()
for entry in report.per_sample:
    pairs = ", ".join(
        f"gt {m['gt_id']} -> pred {m['pred_id']} (iou {m['iou']:.3f})"
        for m in entry["matches"]
    )
    print(f"{entry['sample_id']}: {pairs}")
print()
print("notes:", "; ".join(report.notes))
