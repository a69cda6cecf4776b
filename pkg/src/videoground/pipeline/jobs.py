"""Units of annotation work flowing through the streams."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..dataset import GcgSample, ObjectAnnotation, VideoRef
from ..errors import SchemaError
from ..masks import BoundingBox, rle_from_string
from ..tracks import MaskTrack

__all__ = ["Relation", "PipelineJob", "StreamResult", "load_jobs"]

DEFAULT_QUESTION = (
    "Provide a detailed description of the video. Respond with interleaved "
    "segmentation masks for the corresponding parts of the answer."
)

_STATUS_ORDER = ["pending", "running", "needs_review", "done", "failed"]


@dataclass(frozen=True)
class Relation:
    """One subject/object relation with its referring description."""

    subject_id: int
    subject_category: str
    object_id: int
    object_category: str
    relation: str
    description: str


@dataclass
class PipelineJob:
    """State of one video through stream A, B, or C.

    Stream A inputs: ``objects`` (mask tracks with categories). Stream B:
    ``boxes`` and ``reference_caption``. Stream C: ``boxes`` and
    ``relations``. Status moves forward only, except failed -> pending on
    retry.
    """

    job_id: str
    stream: str
    video: VideoRef
    question: str = DEFAULT_QUESTION
    objects: dict[int, ObjectAnnotation] | None = None
    boxes: dict[int, dict[int, BoundingBox]] | None = None
    reference_caption: str | None = None
    relations: tuple[Relation, ...] = ()
    seed: int = 0
    status: str = "pending"

    def __post_init__(self):
        if self.stream not in ("A", "B", "C"):
            raise ValueError(f"unknown stream {self.stream!r}")

    def set_status(self, new: str) -> None:
        if new not in _STATUS_ORDER:
            raise ValueError(f"unknown status {new!r}")
        if self.status == "failed" and new == "pending":  # retry
            self.status = new
            return
        if _STATUS_ORDER.index(new) < _STATUS_ORDER.index(self.status):
            raise ValueError(f"status cannot move {self.status} -> {new}")
        self.status = new


@dataclass
class StreamResult:
    """Draft sample plus review flags and full call provenance."""

    sample: GcgSample
    flags: list[str] = field(default_factory=list)
    status: str = "needs_review"
    provenance: list[dict] = field(default_factory=list)


def load_jobs(path) -> list[PipelineJob]:
    """Read job descriptions from a JSONL file."""
    jobs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                jobs.append(_job_from_record(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise SchemaError(
                    f"line {lineno}: {exc}", failures=[(lineno, str(exc))]
                ) from exc
    return jobs


def _job_from_record(record: dict) -> PipelineJob:
    video = VideoRef(
        source=record["video"]["source"],
        clip_id=record["video"]["clip_id"],
        frames=int(record["video"]["frames"]),
        width=int(record["video"]["width"]),
        height=int(record["video"]["height"]),
        frame_paths=tuple(record["video"].get("frame_paths", ())),
    )
    objects = None
    if "objects" in record:
        objects = {}
        for oid_text, obj in record["objects"].items():
            frames = {
                int(f): rle_from_string(rle, video.height, video.width)
                for f, rle in obj["track"].items()
            }
            objects[int(oid_text)] = ObjectAnnotation(obj["category"], MaskTrack(frames))
    boxes = None
    if "boxes" in record:
        boxes = {
            int(oid): {int(f): BoundingBox(*map(int, b)) for f, b in per_frame.items()}
            for oid, per_frame in record["boxes"].items()
        }
    relations = tuple(
        Relation(
            subject_id=int(rel["subject"]["target_id"]),
            subject_category=rel["subject"]["category"],
            object_id=int(rel["object"]["target_id"]),
            object_category=rel["object"]["category"],
            relation=rel["relation"],
            description=rel["description"],
        )
        for rel in record.get("relations", ())
    )
    job = PipelineJob(
        job_id=record["job_id"],
        stream=record["stream"],
        video=video,
        objects=objects,
        boxes=boxes,
        reference_caption=record.get("reference_caption"),
        relations=relations,
        seed=int(record.get("seed", 0)),
    )
    if "question" in record:
        job.question = record["question"]
    return job


def frame_path(video: VideoRef, index: int) -> Path:
    from ..errors import MissingFrame

    if index >= len(video.frame_paths):
        raise MissingFrame(
            f"video {video.clip_id!r} declares no path for frame {index}"
        )
    path = Path(video.frame_paths[index])
    if not path.exists():
        raise MissingFrame(f"frame file {path} does not exist")
    return path
