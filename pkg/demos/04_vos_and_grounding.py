"""
Referring segmentation and visual grounding scores
==================================================

J is the per-frame mean of region IoU over annotated frames (distinct
from the volumetric IoU used for object matching), F the per-frame mean
of the boundary measure, and J&F their mean. Grounding compares the
tight box of each predicted mask against box annotations.
"""
import numpy as np

from videoground import BoundingBox, MaskTrack, f_measure, grounding_miou, j_measure, rle_encode
from videoground.vos import GroundingSample

print("Referring segmentation and visual grounding")
print("=" * 40)


def block(y0, y1, x0, x1, size=16):
    m = np.zeros((size, size), dtype=bool)
    m[y0:y1, x0:x1] = True
    return m


def track(*masks):
    return MaskTrack({i: rle_encode(m) for i, m in enumerate(masks)})

###############################################################################
# A prediction that drifts off the object over three frames.

gt = track(block(2, 8, 2, 8), block(3, 9, 3, 9), block(4, 10, 4, 10))
pred = track(block(2, 8, 2, 8), block(3, 9, 4, 10), block(8, 14, 8, 14))

j = j_measure(pred, gt)
f = f_measure(pred, gt)
print(f"J (region):   {j:.4f}")
print(f"F (boundary): {f:.4f}")
print(f"J&F:          {(j + f) / 2:.4f}")

###############################################################################
# Visual grounding: per annotated frame, the IoU between the tight box of
# the predicted mask and the annotated box; empty frames score zero.

samples = [
    GroundingSample(
        question="what leans against the wall?",
        pred_track=track(block(1, 5, 1, 5)),
        gt_boxes={0: BoundingBox(1, 1, 4, 4)},
    ),
    GroundingSample(
        question="who enters the room?",
        pred_track=track(block(0, 4, 0, 4)),
        gt_boxes={0: BoundingBox(2, 2, 4, 4)},
    ),
]
print(f"\nmask-box grounding mIoU over {len(samples)} queries: {grounding_miou(samples):.4f}")
