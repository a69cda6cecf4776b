"""Frame overlays: per-object boxes or mask outlines with id labels.

Colors are a pure function of the object id (golden-angle hue walk), so
overlay files are identical across runs and machines.
"""

from __future__ import annotations

import colorsys
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from ..masks import boundary_map, mask_bbox, rle_decode

__all__ = ["object_color", "render_overlays", "overlay_frame"]

_GOLDEN = 0.6180339887498949


def object_color(obj_id: int) -> tuple[int, int, int]:
    hue = (obj_id * _GOLDEN) % 1.0
    r, g, b = colorsys.hsv_to_rgb(hue, 0.85, 1.0)
    return int(r * 255), int(g * 255), int(b * 255)


def overlay_frame(image: Image.Image, shapes: dict[int, dict], label: bool = True) -> Image.Image:
    """Draw per-object shapes on a copy of ``image``.

    ``shapes`` maps object id to {"box": BoundingBox} and/or
    {"mask": dense bool array}; masks render as boundary outlines, and the
    id label sits at the top-left of the (derived) box.
    """
    pixels = np.array(image.convert("RGB"))
    boxes_to_draw = []
    for oid in sorted(shapes):
        color = object_color(oid)
        shape = shapes[oid]
        box = shape.get("box")
        mask = shape.get("mask")
        if mask is not None:
            pixels[boundary_map(mask)] = color
            if box is None:
                box = mask_bbox(mask)
        if box is not None and box.w > 0 and box.h > 0:
            boxes_to_draw.append((oid, box, color))
    out = Image.fromarray(pixels)
    draw = ImageDraw.Draw(out)
    for oid, box, color in boxes_to_draw:
        draw.rectangle(
            [box.x, box.y, box.x + box.w - 1, box.y + box.h - 1], outline=color
        )
        if label:
            draw.text((box.x, box.y), str(oid), fill=color)
    return out


def render_overlays(
    video,
    out_dir,
    *,
    boxes: dict[int, dict[int, object]] | None = None,
    masks: dict[int, object] | None = None,
    label: bool = True,
    frame_indices=None,
) -> list[Path]:
    """Write one overlay image per frame as ``frame_00000.png`` ...

    ``boxes`` maps object id -> frame -> BoundingBox; ``masks`` maps
    object id -> MaskTrack. Frames default to the whole video.
    """
    from .jobs import frame_path

    if boxes is None and masks is None:
        raise ValueError("need boxes or masks to render")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if frame_indices is None:
        frame_indices = range(video.frames)
    written = []
    for f in frame_indices:
        src = frame_path(video, f)
        with Image.open(src) as img:
            shapes: dict[int, dict] = {}
            if boxes:
                for oid, per_frame in boxes.items():
                    if f in per_frame:
                        shapes.setdefault(oid, {})["box"] = per_frame[f]
            if masks:
                for oid, track in masks.items():
                    rle = track.frames.get(f)
                    if rle is not None:
                        shapes.setdefault(oid, {})["mask"] = rle_decode(rle)
            rendered = overlay_frame(img, shapes, label=label)
        target = out_dir / f"frame_{f:05d}.png"
        rendered.save(target, format="PNG")
        written.append(target)
    return written
