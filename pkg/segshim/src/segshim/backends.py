"""Segmentation backends behind the HTTP shim.

A backend turns per-object, per-frame box prompts into dense masks. The
mock backend fills each prompted box's interior -- deterministic, no
model, and exactly what the benchmark suite needs to run offline. A real
promptable video segmenter plugs in through ``load_backend`` given a
factory path like ``my_module:build``; the factory receives the model
path and must return an object with the same two methods.
"""

from __future__ import annotations

import importlib

import numpy as np

__all__ = ["MockBackend", "load_backend"]


class MockBackend:
    """Box interiors as masks; prompted frames only, no propagation."""

    def ready(self) -> bool:
        return True

    def segment(self, frames, boxes):
        """frames: list of PIL images; boxes: {obj_id: {frame_idx: (x, y, w, h)}}.

        Returns {obj_id: {frame_idx: bool array (H, W)}}.
        """
        out: dict[int, dict[int, np.ndarray]] = {}
        for oid, per_frame in boxes.items():
            masks = {}
            for frame_idx, (x, y, w, h) in per_frame.items():
                width, height = frames[frame_idx].size
                mask = np.zeros((height, width), dtype=bool)
                mask[y:y + h, x:x + w] = True
                masks[frame_idx] = mask
            out[oid] = masks
        return out


class LoadingBackend:
    """Placeholder while a real model is still loading; never ready."""

    def ready(self) -> bool:
        return False

    def segment(self, frames, boxes):
        raise RuntimeError("backend not ready")


def load_backend(factory_path: str, model_path: str | None):
    """Import ``module:callable`` and build the backend from it."""
    module_name, _, attr = factory_path.partition(":")
    if not attr:
        raise ValueError(
            f"backend factory {factory_path!r} must look like 'module:callable'"
        )
    module = importlib.import_module(module_name)
    factory = getattr(module, attr)
    return factory(model_path)
