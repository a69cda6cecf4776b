"""Per-object mask tracks: frame-indexed RLE masks with one geometry."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .masks import RleMask, rle_decode

__all__ = ["MaskTrack", "track_iou"]


@dataclass(frozen=True)
class MaskTrack:
    """Mapping frame index -> mask for one object; all frames share HxW."""

    frames: dict[int, RleMask] = field(default_factory=dict)

    def __post_init__(self):
        if not self.frames:
            raise ValueError("a mask track needs at least one frame")
        dims = {(m.height, m.width) for m in self.frames.values()}
        if len(dims) > 1:
            raise DimensionMismatch(f"track mixes mask geometries: {sorted(dims)}")
        if any(f < 0 for f in self.frames):
            raise ValueError("frame indices must be non-negative")

    @property
    def height(self) -> int:
        return next(iter(self.frames.values())).height

    @property
    def width(self) -> int:
        return next(iter(self.frames.values())).width

    def frame_indices(self) -> list[int]:
        return sorted(self.frames)

    def dense(self, frame: int) -> np.ndarray:
        """Dense mask at ``frame``; an absent frame decodes to all-zero."""
        rle = self.frames.get(frame)
        if rle is None:
            return np.zeros((self.height, self.width), dtype=bool)
        return rle_decode(rle)

    def mask_count(self) -> int:
        return len(self.frames)


def _check_track_dims(a: MaskTrack, b: MaskTrack) -> None:
    if (a.height, a.width) != (b.height, b.width):
        raise DimensionMismatch(
            f"track geometries differ: {a.height}x{a.width} vs {b.height}x{b.width}"
        )


def track_iou(a: MaskTrack, b: MaskTrack) -> float:
    """Volumetric IoU: summed intersections over summed unions across the
    union of frame indices, a missing frame counting as empty. Two tracks
    empty everywhere agree perfectly and score 1.0."""
    _check_track_dims(a, b)
    inter = union = 0
    for f in sorted(set(a.frames) | set(b.frames)):
        ma = a.dense(f)
        mb = b.dense(f)
        inter += int((ma & mb).sum())
        union += int((ma | mb).sum())
    if union == 0:
        return 1.0
    return inter / union
