"""Canonical grounded video-QA dataset: schema, loader, validator, stats.

Records live one JSON object per line with a fixed field order, so a
load/save cycle is byte-stable:

    {"sample_id": ..., "video": {"source", "clip_id", "frames", "width",
     "height", "frame_paths"}, "question": ..., "answer": <ID_SEG text>,
     "objects": {"<id>": {"category", "track": {"<frame>": <rle string>}}}}

Answers are stored in the explicit-id dialect; inline model output is
converted at ingestion so bindings are explicit on disk. Masks are kept
as compressed RLE strings inline, which keeps records self-contained and
diff-able.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .captions import Dialect, GroundedCaption, parse, serialize, with_explicit_ids
from .errors import (
    CaptionParseError,
    InvalidSegmentation,
    InvariantViolation,
    SchemaError,
    VideogroundError,
)
from .masks import rle_from_string, rle_to_string
from .tracks import MaskTrack

__all__ = [
    "VideoRef",
    "ObjectAnnotation",
    "GcgSample",
    "DatasetStats",
    "load_dataset",
    "load_predictions",
    "save_dataset",
    "sample_to_record",
    "sample_from_record",
    "validate_sample",
    "stats",
    "sample_segmentwise",
    "select_frames",
]


@dataclass(frozen=True)
class VideoRef:
    source: str
    clip_id: str
    frames: int
    width: int
    height: int
    frame_paths: tuple[str, ...] = ()

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError("a video needs at least one frame")
        if self.width < 1 or self.height < 1:
            raise ValueError("video dimensions must be positive")


@dataclass(frozen=True)
class ObjectAnnotation:
    category: str
    track: MaskTrack


@dataclass
class GcgSample:
    """One grounded video-QA triplet with per-object mask tracks."""

    sample_id: str
    video: VideoRef
    question: str
    answer: GroundedCaption
    objects: dict[int, ObjectAnnotation] = field(default_factory=dict)

    def tracks(self) -> dict[int, MaskTrack]:
        return {oid: ann.track for oid, ann in self.objects.items()}


@dataclass(frozen=True)
class DatasetStats:
    triplets: int
    objects: int
    masks: int


def validate_sample(sample: GcgSample) -> None:
    """Check the cross-field invariants of one sample."""
    bound = set(sample.answer.binding_ids())
    known = set(sample.objects)
    missing = bound - known
    if missing:
        raise InvariantViolation(
            f"answer cites object ids {sorted(missing)} that have no annotation"
        )
    unreferenced = known - bound
    if unreferenced:
        raise InvariantViolation(
            f"objects {sorted(unreferenced)} are never referenced by the answer"
        )
    for oid, ann in sample.objects.items():
        track = ann.track
        if (track.height, track.width) != (sample.video.height, sample.video.width):
            raise InvariantViolation(
                f"object {oid} masks are {track.height}x{track.width}, video is "
                f"{sample.video.height}x{sample.video.width}"
            )
        out_of_range = [f for f in track.frames if f >= sample.video.frames]
        if out_of_range:
            raise InvariantViolation(
                f"object {oid} has masks at frames {sorted(out_of_range)} beyond "
                f"the {sample.video.frames}-frame video"
            )


def _require(record: dict, key: str, kind) -> object:
    if key not in record:
        raise SchemaError(f"missing field {key!r}")
    value = record[key]
    if not isinstance(value, kind):
        raise SchemaError(f"field {key!r} must be {kind.__name__}, got {type(value).__name__}")
    return value


def sample_from_record(record: dict) -> GcgSample:
    """Decode and validate one record object."""
    if not isinstance(record, dict):
        raise SchemaError("record must be an object")
    sample_id = _require(record, "sample_id", str)
    video_obj = _require(record, "video", dict)
    video = VideoRef(
        source=_require(video_obj, "source", str),
        clip_id=_require(video_obj, "clip_id", str),
        frames=_require(video_obj, "frames", int),
        width=_require(video_obj, "width", int),
        height=_require(video_obj, "height", int),
        frame_paths=tuple(video_obj.get("frame_paths", ())),
    )
    question = _require(record, "question", str)
    answer_text = _require(record, "answer", str)
    try:
        answer = parse(answer_text, Dialect.ID_SEG)
    except CaptionParseError as exc:
        raise SchemaError(f"answer does not parse: {exc}") from exc

    objects: dict[int, ObjectAnnotation] = {}
    for oid_text, obj in _require(record, "objects", dict).items():
        try:
            oid = int(oid_text)
        except ValueError as exc:
            raise SchemaError(f"object id {oid_text!r} is not an integer") from exc
        if not isinstance(obj, dict):
            raise SchemaError(f"object {oid} must be an object")
        category = _require(obj, "category", str)
        track_obj = _require(obj, "track", dict)
        frames = {}
        for frame_text, rle_text in track_obj.items():
            try:
                frame = int(frame_text)
            except ValueError as exc:
                raise SchemaError(f"frame index {frame_text!r} is not an integer") from exc
            if not isinstance(rle_text, str):
                raise SchemaError(f"mask for object {oid} frame {frame} must be a string")
            try:
                frames[frame] = rle_from_string(rle_text, video.height, video.width)
            except VideogroundError as exc:
                raise InvariantViolation(
                    f"object {oid} frame {frame}: {exc}"
                ) from exc
        if not frames:
            raise InvariantViolation(f"object {oid} has an empty track")
        objects[oid] = ObjectAnnotation(category, MaskTrack(frames))

    sample = GcgSample(sample_id, video, question, answer, objects)
    validate_sample(sample)
    return sample


def sample_to_record(sample: GcgSample) -> dict:
    """Encode a sample with the canonical field order."""
    answer = with_explicit_ids(sample.answer)
    return {
        "sample_id": sample.sample_id,
        "video": {
            "source": sample.video.source,
            "clip_id": sample.video.clip_id,
            "frames": sample.video.frames,
            "width": sample.video.width,
            "height": sample.video.height,
            "frame_paths": list(sample.video.frame_paths),
        },
        "question": sample.question,
        "answer": serialize(answer, Dialect.ID_SEG),
        "objects": {
            str(oid): {
                "category": ann.category,
                "track": {
                    str(f): rle_to_string(ann.track.frames[f])
                    for f in ann.track.frame_indices()
                },
            }
            for oid, ann in sorted(sample.objects.items())
        },
    }


def dumps_sample(sample: GcgSample) -> str:
    return json.dumps(sample_to_record(sample), ensure_ascii=False)


_MAX_REPORTED = 20


def load_dataset(path) -> list[GcgSample]:
    """Load and fully validate a record file.

    Per-line failures are collected; structural problems raise
    :class:`SchemaError` and purely semantic ones
    :class:`InvariantViolation`, each carrying up to 20 reported
    (line, message) pairs.
    """
    samples = []
    schema_failures: list[tuple[int, str]] = []
    semantic_failures: list[tuple[int, str]] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except ValueError as exc:
                schema_failures.append((lineno, f"invalid JSON: {exc}"))
                continue
            try:
                samples.append(sample_from_record(record))
            except SchemaError as exc:
                schema_failures.append((lineno, str(exc)))
            except InvariantViolation as exc:
                semantic_failures.append((lineno, str(exc)))
    if schema_failures or semantic_failures:
        failures = sorted(schema_failures + semantic_failures)
        shown = "; ".join(f"line {n}: {msg}" for n, msg in failures[:_MAX_REPORTED])
        summary = f"{len(failures)} invalid record(s): {shown}"
        if schema_failures:
            raise SchemaError(summary, failures=failures)
        raise InvariantViolation(summary, failures=failures)
    return samples


def load_predictions(path) -> tuple[dict[str, GcgSample], list[str]]:
    """Lenient loader for prediction files.

    Broken lines become diagnostics instead of errors, so a scoring run
    treats them as missing predictions rather than aborting.
    """
    samples: dict[str, GcgSample] = {}
    diagnostics: list[str] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                sample = sample_from_record(record)
            except (ValueError, VideogroundError) as exc:
                diagnostics.append(f"line {lineno}: {exc}")
                continue
            if sample.sample_id in samples:
                diagnostics.append(
                    f"line {lineno}: duplicate prediction for {sample.sample_id!r}, keeping the last"
                )
            samples[sample.sample_id] = sample
    return samples, diagnostics


def save_dataset(samples, path) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        for sample in samples:
            f.write(dumps_sample(sample))
            f.write("\n")
    tmp.replace(path)


def stats(samples) -> DatasetStats:
    """Triplet / object / mask counts over a dataset."""
    triplets = objects = masks = 0
    for sample in samples:
        triplets += 1
        objects += len(sample.objects)
        masks += sum(ann.track.mask_count() for ann in sample.objects.values())
    return DatasetStats(triplets, objects, masks)


def sample_segmentwise(frame_count: int, segments: int) -> list[list[int]]:
    """Split frames 0..T-1 into K contiguous segments of floor(T/K) frames,
    the final segment absorbing the remainder."""
    if segments == 0 or segments > frame_count:
        raise InvalidSegmentation(
            f"cannot split {frame_count} frames into {segments} segments"
        )
    size = frame_count // segments
    out = []
    for k in range(segments):
        start = k * size
        end = frame_count if k == segments - 1 else start + size
        out.append(list(range(start, end)))
    return out


def select_frames(frame_count: int, segments: int) -> list[int]:
    """First frame of each segment: the representative subset sent to
    chat models. Caps the segment count at the frame count."""
    return [seg[0] for seg in sample_segmentwise(frame_count, min(segments, frame_count))]
