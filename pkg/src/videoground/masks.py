"""Dense binary masks, run-length codecs, and mask geometry.

A dense mask is a 2-D numpy bool array of shape ``(height, width)``;
any array-like of 0/1 values is accepted and coerced. Run-length masks
(:class:`RleMask`) store the same pixels in column-major order
(top-to-bottom, then left-to-right) as alternating zero/one run lengths,
always beginning with the zero-run. The compressed text form is the
6-bit/char scheme used by the mainstream detection-dataset tooling, so
strings interchange with those ecosystems byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy.ndimage import binary_dilation

from .errors import CountsMismatch, DimensionMismatch, MalformedRleString

__all__ = [
    "BoundingBox",
    "RleMask",
    "as_mask",
    "rle_encode",
    "rle_decode",
    "rle_to_string",
    "rle_from_string",
    "iou",
    "mask_bbox",
    "box_iou",
    "boundary_map",
    "boundary_tolerance",
    "boundary_f",
    "read_mask_png",
    "write_mask_png",
]


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel box: ``x``/``y`` is the top-left corner."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise ValueError(f"box sides must be non-negative, got {self.w}x{self.h}")

    @property
    def area(self) -> int:
        return self.w * self.h


@dataclass(frozen=True)
class RleMask:
    """Column-major run-length mask.

    ``counts`` alternates zero-runs and one-runs starting with the
    zero-run (which may be 0 when pixel (0, 0) is set). Interior runs
    are never zero, and the counts sum to ``height * width``.
    """

    height: int
    width: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError(f"mask must be at least 1x1, got {self.height}x{self.width}")
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if any(c < 0 for c in counts):
            raise ValueError(f"negative run length in {counts}")
        if any(c == 0 for c in counts[1:]):
            raise ValueError("zero-length interior run (only the leading zero-run may be 0)")
        total = sum(counts)
        if total != self.height * self.width:
            raise CountsMismatch(
                f"counts sum to {total}, expected {self.height * self.width} "
                f"for a {self.height}x{self.width} mask"
            )

    @property
    def area(self) -> int:
        """Number of set pixels."""
        return sum(self.counts[1::2])


def as_mask(mask) -> np.ndarray:
    """Coerce an array-like of 0/1 values to a validated 2-D bool array."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"mask must be at least 1x1, got shape {arr.shape}")
    if arr.dtype != bool:
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("mask values must be 0/1")
        arr = arr.astype(bool)
    return arr


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")


# --------------------------------------------------------------------- codec

def rle_encode(mask) -> RleMask:
    """Encode a dense mask as column-major alternating run lengths."""
    m = as_mask(mask)
    h, w = m.shape
    flat = m.ravel(order="F")
    breaks = np.flatnonzero(flat[1:] != flat[:-1])
    edges = np.concatenate(([0], breaks + 1, [flat.size]))
    runs = np.diff(edges).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return RleMask(h, w, tuple(int(r) for r in runs))


def rle_decode(rle: RleMask) -> np.ndarray:
    """Expand run lengths back to the dense mask (exact inverse of encode)."""
    total = sum(rle.counts)
    if total != rle.height * rle.width:
        raise CountsMismatch(
            f"counts sum to {total}, expected {rle.height * rle.width}"
        )
    values = np.zeros(len(rle.counts), dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, rle.counts)
    return flat.reshape((rle.height, rle.width), order="F")


def rle_to_string(rle: RleMask) -> str:
    """Compress counts to text.

    Counts from the fourth onward are delta-encoded against the count two
    places back; each (possibly negative) value is written little-endian in
    6-bit chunks, bit ``0x20`` flagging continuation and bit ``0x10`` of the
    final chunk carrying the sign, each chunk stored as ``chr(chunk + 48)``.
    """
    counts = rle.counts
    out = []
    for i, count in enumerate(counts):
        x = count if i <= 2 else count - counts[i - 2]
        while True:
            chunk = x & 0x1F
            x >>= 5
            more = (x != -1) if (chunk & 0x10) else (x != 0)
            if more:
                chunk |= 0x20
            out.append(chr(chunk + 48))
            if not more:
                break
    return "".join(out)


def rle_from_string(text: str, height: int, width: int) -> RleMask:
    """Inverse of :func:`rle_to_string` for a known mask geometry."""
    counts: list[int] = []
    pos = 0
    n = len(text)
    while pos < n:
        x = 0
        k = 0
        while True:
            if pos >= n:
                raise MalformedRleString("string ends inside a continued value")
            code = ord(text[pos]) - 48
            if not 0 <= code <= 63:
                raise MalformedRleString(
                    f"character {text[pos]!r} at offset {pos} outside code range 48..111"
                )
            x |= (code & 0x1F) << (5 * k)
            pos += 1
            k += 1
            if not code & 0x20:
                if code & 0x10:
                    x |= -1 << (5 * k)
                break
        if len(counts) > 2:
            x += counts[-2]
        counts.append(x)
    return RleMask(height, width, tuple(counts))


# ------------------------------------------------------------------ geometry

def iou(a, b) -> float:
    """Intersection over union of two equal-sized masks.

    Two empty masks agree perfectly on absence and score 1.0.
    """
    ma, mb = as_mask(a), as_mask(b)
    _check_same_shape(ma, mb)
    union = int((ma | mb).sum())
    if union == 0:
        return 1.0
    return int((ma & mb).sum()) / union


def mask_bbox(mask) -> BoundingBox | None:
    """Tightest box containing all set pixels, or None for an empty mask."""
    m = as_mask(mask)
    ys, xs = np.nonzero(m)
    if ys.size == 0:
        return None
    x0, x1 = int(xs.min()), int(xs.max())
    y0, y1 = int(ys.min()), int(ys.max())
    return BoundingBox(x0, y0, x1 - x0 + 1, y1 - y0 + 1)


def box_iou(a: BoundingBox, b: BoundingBox) -> float:
    """Area overlap over area union; two zero-area boxes score 0.0."""
    ix = max(a.x, b.x)
    iy = max(a.y, b.y)
    ix2 = min(a.x + a.w, b.x + b.w)
    iy2 = min(a.y + a.h, b.y + b.h)
    inter = max(0, ix2 - ix) * max(0, iy2 - iy)
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def boundary_map(mask) -> np.ndarray:
    """Mask pixels with at least one 4-neighbor outside the mask.

    The frame border counts as outside, so a fully set mask still has a
    boundary ring.
    """
    m = as_mask(mask)
    padded = np.pad(m, 1, constant_values=False)
    interior = (
        padded[1:-1, :-2]
        & padded[1:-1, 2:]
        & padded[:-2, 1:-1]
        & padded[2:, 1:-1]
    )
    return m & ~interior


def boundary_tolerance(height: int, width: int) -> int:
    """Match radius in pixels: ceil(0.008 x image diagonal)."""
    return math.ceil(0.008 * math.hypot(width, height))


def _disk(radius: int) -> np.ndarray:
    span = np.arange(-radius, radius + 1)
    dx, dy = np.meshgrid(span, span)
    return dx * dx + dy * dy <= radius * radius


def boundary_f(pred, gt) -> float:
    """Boundary F measure under a small spatial tolerance.

    Precision is the fraction of prediction-boundary pixels lying within
    the tolerance radius of a ground-truth boundary pixel (computed by
    dilating the opposing boundary with a disk of that radius); recall is
    symmetric; F = 2PR/(P+R) with 0 when P+R = 0. An empty boundary makes
    its own fraction vacuously 1, so two empty masks score 1.0 and an
    empty prediction against a non-empty truth scores 0.0.
    """
    mp, mg = as_mask(pred), as_mask(gt)
    _check_same_shape(mp, mg)
    pb = boundary_map(mp)
    gb = boundary_map(mg)
    n_pred = int(pb.sum())
    n_gt = int(gb.sum())
    if n_pred == 0 and n_gt == 0:
        return 1.0
    radius = boundary_tolerance(*mp.shape)
    disk = _disk(radius)
    gb_reach = binary_dilation(gb, structure=disk) if n_gt else np.zeros_like(gb)
    pb_reach = binary_dilation(pb, structure=disk) if n_pred else np.zeros_like(pb)
    precision = int((pb & gb_reach).sum()) / n_pred if n_pred else 1.0
    recall = int((gb & pb_reach).sum()) / n_gt if n_gt else 1.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


# ----------------------------------------------------------------- image i/o

def write_mask_png(mask, path) -> None:
    """Store a dense mask as a single-channel 0/255 PNG."""
    m = as_mask(mask)
    Image.fromarray(m.astype(np.uint8) * 255, mode="L").save(path, format="PNG")


def read_mask_png(path) -> np.ndarray:
    """Load a mask stored by :func:`write_mask_png` (any gray >= 128 is set)."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return arr >= 128
