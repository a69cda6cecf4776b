"""Referring video segmentation scores (J, F, J&F) and box-grounding mIoU.

J here is the arithmetic per-frame mean of region IoU over ground-truth
annotated frames -- deliberately distinct from the volumetric track IoU
the GCG matcher uses -- and F is the per-frame mean of the boundary
measure. Scores aggregate per (video, object) pair first, then macro
average over pairs.

Grounding compares the tight bounding box of each predicted mask frame
against box annotations ("mask-box mIoU"), since the evaluated models
emit masks while the benchmark annotates boxes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import load_dataset, load_predictions
from .errors import SchemaError
from .masks import (
    BoundingBox,
    boundary_f,
    box_iou,
    iou,
    mask_bbox,
    read_mask_png,
    rle_encode,
    rle_from_string,
)
from .tracks import MaskTrack

__all__ = [
    "VosScore",
    "GroundingSample",
    "j_measure",
    "f_measure",
    "score_vos",
    "grounding_miou",
    "score_grounding",
    "read_mask_directory",
    "load_grounding_files",
]


def j_measure(pred: MaskTrack | None, gt: MaskTrack) -> float:
    """Mean per-frame region IoU over ground-truth annotated frames."""
    values = []
    for f in gt.frame_indices():
        gt_mask = gt.dense(f)
        if pred is None:
            pred_mask = gt_mask & False
        else:
            pred_mask = pred.dense(f)
        values.append(iou(pred_mask, gt_mask))
    return sum(values) / len(values)


def f_measure(pred: MaskTrack | None, gt: MaskTrack) -> float:
    """Mean per-frame boundary measure over ground-truth annotated frames."""
    values = []
    for f in gt.frame_indices():
        gt_mask = gt.dense(f)
        if pred is None:
            pred_mask = gt_mask & False
        else:
            pred_mask = pred.dense(f)
        values.append(boundary_f(pred_mask, gt_mask))
    return sum(values) / len(values)


@dataclass
class VosScore:
    """J / F / J&F bundle; ``jf`` is exactly the mean of ``j`` and ``f``."""

    j: float
    f: float
    per_object: list[dict] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    @property
    def jf(self) -> float:
        return (self.j + self.f) / 2

    def to_json(self) -> str:
        return json.dumps(
            {
                "j": self.j,
                "f": self.f,
                "jf": self.jf,
                "aggregation": "per (video, object) pair, then macro average",
                "per_object": self.per_object,
                "diagnostics": self.diagnostics,
            },
            ensure_ascii=False,
            indent=2,
        )

    def human_table(self) -> str:
        header = f"{'J':>8} {'F':>8} {'J&F':>8}"
        row = f"{self.j:8.3f} {self.f:8.3f} {self.jf:8.3f}"
        return f"{header}\n{row}"


def _load_tracks(path) -> tuple[dict[tuple[str, int], MaskTrack], list[str]]:
    """Read (video, object) -> track from a record file or a mask-image tree."""
    path = Path(path)
    if path.is_dir():
        return read_mask_directory(path), []
    samples, diagnostics = load_predictions(path)
    tracks = {
        (sid, oid): ann.track
        for sid, sample in samples.items()
        for oid, ann in sample.objects.items()
    }
    return tracks, diagnostics


def score_vos(pred_path, gt_path) -> VosScore:
    """Score predictions against ground truth, either side being a record
    file or a per-frame mask image directory.

    Missing predictions for a ground-truth pair score 0 and leave a
    diagnostic.
    """
    gt_path = Path(gt_path)
    if gt_path.is_dir():
        gt_tracks = read_mask_directory(gt_path)
    else:
        gt_tracks = {
            (s.sample_id, oid): ann.track
            for s in load_dataset(gt_path)
            for oid, ann in s.objects.items()
        }
    if not gt_tracks:
        raise SchemaError(f"no ground-truth tracks found in {gt_path}")
    pred_tracks, diagnostics = _load_tracks(pred_path)

    per_object = []
    js = []
    fs = []
    for key in sorted(gt_tracks):
        gt_track = gt_tracks[key]
        pred_track = pred_tracks.get(key)
        if pred_track is None:
            diagnostics.append(f"no prediction for video {key[0]!r} object {key[1]}")
        j = j_measure(pred_track, gt_track)
        f = f_measure(pred_track, gt_track)
        js.append(j)
        fs.append(f)
        per_object.append(
            {"video": key[0], "object": key[1], "j": j, "f": f, "jf": (j + f) / 2}
        )
    return VosScore(
        j=sum(js) / len(js),
        f=sum(fs) / len(fs),
        per_object=per_object,
        diagnostics=diagnostics,
    )


_FRAME_NUMBER = re.compile(r"(\d+)")


def _frame_number(path: Path) -> int:
    m = _FRAME_NUMBER.search(path.stem)
    if m is None:
        raise SchemaError(f"mask file {path} has no frame number in its name")
    return int(m.group(1))


def read_mask_directory(root) -> dict[tuple[str, int], MaskTrack]:
    """Ingest the common VOS layout of per-frame mask images.

    ``root/<video>/<object>/<frame>.png`` or, for a single unnamed video,
    ``root/<object>/<frame>.png``; images are single-channel 0/255.
    """
    root = Path(root)
    tracks: dict[tuple[str, int], MaskTrack] = {}

    def ingest(video: str, obj_dir: Path):
        frames = {}
        for image in sorted(obj_dir.iterdir()):
            if image.suffix.lower() not in (".png", ".bmp"):
                continue
            frames[_frame_number(image)] = rle_encode(read_mask_png(image))
        if not frames:
            raise SchemaError(f"object directory {obj_dir} holds no mask images")
        try:
            oid = int(obj_dir.name)
        except ValueError as exc:
            raise SchemaError(f"object directory {obj_dir.name!r} is not an id") from exc
        tracks[(video, oid)] = MaskTrack(frames)

    subdirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not subdirs:
        raise SchemaError(f"{root} holds no mask directories")
    nested = any(any(g.is_dir() for g in d.iterdir()) for d in subdirs)
    for d in subdirs:
        if nested:
            for obj_dir in sorted(g for g in d.iterdir() if g.is_dir()):
                ingest(d.name, obj_dir)
        else:
            ingest("", d)
    return tracks


# ---------------------------------------------------------------- grounding

@dataclass(frozen=True)
class GroundingSample:
    """An interrogative query with a predicted track and box annotations."""

    question: str
    pred_track: MaskTrack | None
    gt_boxes: dict[int, BoundingBox]

    def __post_init__(self):
        if not self.gt_boxes:
            raise ValueError("a grounding sample needs at least one annotated box")


def grounding_miou(samples: list[GroundingSample]) -> float:
    """Mean over samples of the per-frame mask-box IoU.

    Per sample: mean over annotated frames of the IoU between the tight
    box of the predicted mask and the annotated box, empty predicted
    frames scoring 0; frames without annotation are ignored entirely.
    """
    per_sample = []
    for sample in samples:
        values = []
        for f, gt_box in sorted(sample.gt_boxes.items()):
            pred_mask = None if sample.pred_track is None else sample.pred_track.dense(f)
            pred_box = mask_bbox(pred_mask) if pred_mask is not None else None
            values.append(box_iou(pred_box, gt_box) if pred_box is not None else 0.0)
        per_sample.append(sum(values) / len(values))
    return sum(per_sample) / len(per_sample) if per_sample else 0.0


def load_grounding_files(pred_path, gt_path):
    """Load grounding samples from JSONL files.

    Ground truth lines: {"sample_id", "question", "width", "height",
    "boxes": {"<frame>": [x, y, w, h]}}. Prediction lines: {"sample_id",
    "track": {"<frame>": <rle string>}} at the same geometry.
    """
    gt_lines = {}
    with open(gt_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                boxes = {
                    int(k): BoundingBox(*map(int, v))
                    for k, v in record["boxes"].items()
                }
                gt_lines[record["sample_id"]] = (
                    record.get("question", ""),
                    int(record["width"]),
                    int(record["height"]),
                    boxes,
                )
            except (ValueError, KeyError, TypeError) as exc:
                raise SchemaError(f"line {lineno}: {exc}", failures=[(lineno, str(exc))])

    pred_lines = {}
    diagnostics = []
    with open(pred_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                pred_lines[record["sample_id"]] = record["track"]
            except (ValueError, KeyError, TypeError) as exc:
                diagnostics.append(f"line {lineno}: {exc}")

    samples = []
    for sid, (question, width, height, boxes) in sorted(gt_lines.items()):
        track = None
        raw = pred_lines.get(sid)
        if raw is None:
            diagnostics.append(f"no prediction for sample {sid!r}")
        else:
            try:
                frames = {
                    int(k): rle_from_string(v, height, width) for k, v in raw.items()
                }
                track = MaskTrack(frames) if frames else None
            except Exception as exc:
                diagnostics.append(f"prediction for {sid!r} unusable: {exc}")
        samples.append(GroundingSample(question, track, boxes))
    return samples, diagnostics


def score_grounding(pred_path, gt_path) -> tuple[float, list[str]]:
    samples, diagnostics = load_grounding_files(pred_path, gt_path)
    return grounding_miou(samples), diagnostics
