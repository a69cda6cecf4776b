"""The HTTP surface: POST /v1/segment and GET /healthz.

Requests carry frames (file paths or base64 image payloads) and
per-object box prompts; responses carry per-frame compressed RLE masks
in the videoground string format, keyed by the same object ids. Malformed
requests get a 400 with a reason; a backend that is not ready yet gates
everything behind 503.
"""

from __future__ import annotations

import base64
import binascii
import io
import os
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from PIL import Image

from videoground.masks import rle_encode, rle_to_string

from .backends import MockBackend

__all__ = ["create_app"]


def _load_frame(entry: str) -> Image.Image:
    if not isinstance(entry, str) or not entry:
        raise HTTPException(400, "frame entries must be non-empty strings")
    path = Path(entry)
    if path.exists():
        try:
            with Image.open(path) as img:
                return img.convert("RGB")
        except OSError as exc:
            raise HTTPException(400, f"frame file {entry!r} is not an image: {exc}")
    payload = entry.split(",", 1)[-1]  # tolerate a data: URL prefix
    try:
        data = base64.b64decode(payload, validate=True)
        with Image.open(io.BytesIO(data)) as img:
            return img.convert("RGB")
    except (binascii.Error, OSError) as exc:
        raise HTTPException(
            400, f"frame entry is neither an existing path nor base64 image data: {exc}"
        )


def _parse_boxes(raw, frame_count: int):
    if not isinstance(raw, dict) or not raw:
        raise HTTPException(400, "'boxes' must be a non-empty object")
    boxes: dict[int, dict[int, tuple[int, int, int, int]]] = {}
    for oid_text, per_frame in raw.items():
        try:
            oid = int(oid_text)
        except (TypeError, ValueError):
            raise HTTPException(400, f"object id {oid_text!r} is not an integer")
        if not isinstance(per_frame, dict) or not per_frame:
            raise HTTPException(400, f"object {oid} needs at least one frame box")
        frames = {}
        for frame_text, box in per_frame.items():
            try:
                frame_idx = int(frame_text)
            except (TypeError, ValueError):
                raise HTTPException(400, f"frame index {frame_text!r} is not an integer")
            if not 0 <= frame_idx < frame_count:
                raise HTTPException(
                    400, f"frame index {frame_idx} outside 0..{frame_count - 1}"
                )
            if (
                not isinstance(box, (list, tuple))
                or len(box) != 4
                or not all(isinstance(v, int) for v in box)
            ):
                raise HTTPException(
                    400, f"box for object {oid} frame {frame_idx} must be [x, y, w, h]"
                )
            x, y, w, h = box
            if x < 0 or y < 0 or w < 0 or h < 0:
                raise HTTPException(
                    400, f"box for object {oid} frame {frame_idx} has negative values"
                )
            frames[frame_idx] = (x, y, w, h)
        boxes[oid] = frames
    return boxes


def _check_bounds(boxes, frames):
    for oid, per_frame in boxes.items():
        for frame_idx, (x, y, w, h) in per_frame.items():
            width, height = frames[frame_idx].size
            if x + w > width or y + h > height:
                raise HTTPException(
                    400,
                    f"box for object {oid} frame {frame_idx} exceeds the "
                    f"{width}x{height} frame",
                )


def create_app(backend=None) -> FastAPI:
    app = FastAPI(title="segshim")
    app.state.backend = backend if backend is not None else MockBackend()

    @app.get("/healthz")
    def healthz():
        if not app.state.backend.ready():
            raise HTTPException(503, "model not loaded")
        return {"status": "ready"}

    @app.post("/v1/segment")
    async def segment(request: Request):
        if not app.state.backend.ready():
            raise HTTPException(503, "model not loaded")
        try:
            body = await request.json()
        except Exception:
            raise HTTPException(400, "request body is not valid JSON")
        if not isinstance(body, dict):
            raise HTTPException(400, "request body must be an object")
        raw_frames = body.get("frames")
        if not isinstance(raw_frames, list) or not raw_frames:
            raise HTTPException(400, "'frames' must be a non-empty list")
        frames = [_load_frame(entry) for entry in raw_frames]
        boxes = _parse_boxes(body.get("boxes"), len(frames))
        _check_bounds(boxes, frames)

        masks = app.state.backend.segment(frames, boxes)
        return {
            str(oid): {
                str(frame_idx): rle_to_string(rle_encode(mask))
                for frame_idx, mask in sorted(per_frame.items())
            }
            for oid, per_frame in sorted(masks.items())
        }

    return app


def app_from_env() -> FastAPI:
    """Build the app from SEG_BACKEND / SEG_MODEL_PATH, defaulting to mock."""
    factory = os.environ.get("SEG_BACKEND")
    if factory:
        from .backends import load_backend

        backend = load_backend(factory, os.environ.get("SEG_MODEL_PATH"))
    else:
        backend = MockBackend()
    return create_app(backend)
