"""The three annotation streams.

Stream A (mask-only sources): per-object patch description, box-overlay
refinement, id-labeled dense captioning, then a merge with an auxiliary
dense caption from a second video LMM; the resulting ``obj_<id>`` markers
become explicit-id bindings. Stream B (boxes + caption): auxiliary dense
caption plus the ground-truth caption through the refinement template,
masks from the segmentation service. Stream C (boxes + referring
expressions): relation prompt producing a bracket-dialect caption,
converted to explicit ids, masks from the segmentation service.

Soft problems (missing/duplicated markers, dropped bindings, missing
masks) are flagged for human review instead of failing the job; hard
service failures raise. Every chat call goes through the reply cache, so
re-running a job with an intact cache is deterministic byte for byte.
"""

from __future__ import annotations

import ast
import io
import json
import re
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from PIL import Image

from ..captions import Dialect, GroundedCaption, parse, serialize
from ..dataset import GcgSample, ObjectAnnotation, dumps_sample, select_frames
from ..errors import CaptionParseError, UnparseableReply
from ..masks import BoundingBox, mask_bbox, rle_decode
from ..services import CachedChat, PromptCache
from ..tracks import MaskTrack
from . import prompts
from .jobs import PipelineJob, StreamResult, frame_path
from .overlays import overlay_frame, render_overlays

__all__ = [
    "run_stream_a",
    "run_stream_b",
    "run_stream_c",
    "run_job",
    "run_jobs",
    "bind_markers",
]

FLAG_MARKER_MISMATCH = "marker_mismatch"
FLAG_BINDING_GAP = "binding_gap"


# ------------------------------------------------------------ reply parsing

def _reply_object(reply: str) -> dict:
    """Extract the first JSON-ish object from a reply."""
    text = reply.strip()
    start, end = text.find("{"), text.rfind("}")
    if start == -1 or end <= start:
        raise UnparseableReply(f"no object found in reply: {text[:80]!r}")
    blob = text[start:end + 1]
    try:
        obj = json.loads(blob)
    except ValueError:
        try:
            obj = ast.literal_eval(blob)
        except (ValueError, SyntaxError) as exc:
            raise UnparseableReply(f"reply is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise UnparseableReply("reply object is not a mapping")
    return obj


def _key_validator(key: str):
    def validate(reply: str) -> None:
        obj = _reply_object(reply)
        if key not in obj or not isinstance(obj[key], str):
            raise UnparseableReply(f"reply lacks a string {key!r} field")

    return validate


def _caption_validator(key: str, dialect: Dialect):
    check_key = _key_validator(key)

    def validate(reply: str) -> None:
        check_key(reply)
        try:
            parse(_reply_object(reply)[key], dialect)
        except CaptionParseError as exc:
            raise UnparseableReply(f"caption in reply does not parse: {exc}") from exc

    return validate


def _extract_caption(reply: str, key: str) -> str:
    return _reply_object(reply)[key]


# ------------------------------------------------------------- marker binding

_MARKER = re.compile(r"obj_(\d+)")
_TRAILING_PUNCT = ",.;:!?"


def bind_markers(text: str, known_ids) -> tuple[str, list[str]]:
    """Turn ``noun obj_<id>`` markers into explicit-id phrase tags.

    The token immediately before each marker becomes the tagged phrase
    (trailing punctuation is moved behind the tag). Duplicated markers
    bind their first occurrence only; duplicates, unknown ids, markers
    with no preceding noun, and ids never marked are all flagged for
    review rather than failing.
    """
    known = set(known_ids)
    out: list[str] = []
    pos = 0
    bound: list[int] = []
    flags: list[str] = []
    for m in _MARKER.finditer(text):
        before = text[pos:m.start()]
        oid = int(m.group(1))
        stripped = before.rstrip()
        cut = max(stripped.rfind(ch) for ch in " \t\n") if stripped else -1
        lead, noun = stripped[:cut + 1], stripped[cut + 1:]
        punct = ""
        while noun and noun[-1] in _TRAILING_PUNCT:
            punct = noun[-1] + punct
            noun = noun[:-1]
        if not noun:
            flags.append(f"{FLAG_MARKER_MISMATCH}: obj_{oid} has no preceding noun")
            out.append(stripped)
        elif oid not in known:
            flags.append(f"{FLAG_MARKER_MISMATCH}: obj_{oid} is not a known object")
            out.append(stripped)
        elif oid in bound:
            flags.append(f"{FLAG_MARKER_MISMATCH}: obj_{oid} marked more than once")
            out.append(stripped)
        else:
            out.append(f"{lead}<p> {noun} </p> [SEG:{oid}]{punct}")
            bound.append(oid)
        pos = m.end()
    out.append(text[pos:])
    for oid in sorted(known - set(bound)):
        flags.append(f"{FLAG_MARKER_MISMATCH}: obj_{oid} never marked in the caption")
    return "".join(out), flags


# --------------------------------------------------------------- frame plumbing

def _frame_bytes(video, indices) -> tuple[bytes, ...]:
    return tuple(frame_path(video, i).read_bytes() for i in indices)


def _png_bytes(image: Image.Image) -> bytes:
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return buf.getvalue()


def _object_boxes(track: MaskTrack) -> dict[int, BoundingBox]:
    boxes = {}
    for f in track.frame_indices():
        box = mask_bbox(rle_decode(track.frames[f]))
        if box is not None:
            boxes[f] = box
    return boxes


def _subset(indices: list[int], segments: int) -> list[int]:
    if not indices:
        return []
    picks = select_frames(len(indices), min(segments, len(indices)))
    return [indices[i] for i in picks]


def _safe_caption(text: str) -> GroundedCaption:
    """Plain, unbound caption used when an answer refuses to parse."""
    return GroundedCaption(" ".join(text.split()), (), Dialect.ID_SEG)


def _first_surfaces(caption: GroundedCaption) -> dict[int, str]:
    surfaces: dict[int, str] = {}
    for span in caption.spans:
        surfaces.setdefault(span.binding.id, span.surface)
    return surfaces


# -------------------------------------------------------------------- streams

def run_stream_a(
    job: PipelineJob,
    chat: CachedChat,
    videolmm: CachedChat,
    *,
    workdir=None,
    frame_segments: int = 8,
) -> StreamResult:
    """Mask-only videos: describe, refine, densely caption, merge, bind."""
    if job.stream != "A":
        raise ValueError(f"job {job.job_id!r} is stream {job.stream}, not A")
    if not job.objects:
        raise ValueError(f"stream A job {job.job_id!r} has no objects")
    job.set_status("running")
    workdir = Path(workdir) if workdir else None

    refined: list[tuple[int, str, str]] = []
    for oid in sorted(job.objects):
        ann = job.objects[oid]
        boxes = _object_boxes(ann.track)
        frames_with_obj = sorted(boxes)
        if not frames_with_obj:
            raise ValueError(f"object {oid} of job {job.job_id!r} has only empty masks")
        picked = _subset(frames_with_obj, frame_segments)

        # i) crop the object through the video and ask what it is
        patches = []
        for f in picked:
            with Image.open(frame_path(job.video, f)) as img:
                b = boxes[f]
                patches.append(_png_bytes(img.crop((b.x, b.y, b.x + b.w, b.y + b.h))))
        rough = chat.call(
            "a_i_object_patch",
            prompts.object_patch_prompt(ann.category),
            images=tuple(patches),
        )

        # ii) refine against box-highlighted full frames
        if workdir:
            overlay_dir = workdir / job.job_id / f"overlays_obj_{oid}"
        else:
            overlay_dir = None
        overlay_images = _render_or_draw(
            job, boxes={oid: boxes}, out_dir=overlay_dir, label=False,
            frame_indices=picked,
        )
        refined_text = chat.call(
            "a_ii_object_refine",
            prompts.object_refine_prompt(rough, oid),
            images=overlay_images,
        )
        refined.append((oid, ann.category, refined_text))

    # iii) dense caption over id-labeled overlays of all objects
    all_boxes = {oid: _object_boxes(ann.track) for oid, ann in job.objects.items()}
    picked = _subset(list(range(job.video.frames)), frame_segments)
    labeled = _render_or_draw(
        job, boxes=all_boxes,
        out_dir=(workdir / job.job_id / "overlays_labeled") if workdir else None,
        label=True, frame_indices=picked,
    )
    dense = chat.call(
        "a_iii_dense_caption", prompts.dense_caption_prompt(refined), images=labeled
    )

    # iv) merge with an auxiliary dense caption from the second video LMM
    aux = videolmm.call(
        "aux_dense_caption", prompts.aux_dense_prompt(),
        images=_frame_bytes(job.video, picked),
    )
    merged_reply = chat.call(
        "a_iv_merge",
        prompts.merge_prompt(dense, aux),
        validate=_key_validator("merged_caption"),
    )
    merged = _extract_caption(merged_reply, "merged_caption")

    answer_text, flags = bind_markers(merged, set(job.objects))
    try:
        answer = parse(answer_text, Dialect.ID_SEG)
    except CaptionParseError as exc:
        flags.append(f"{FLAG_MARKER_MISMATCH}: bound caption does not parse ({exc})")
        answer = _safe_caption(merged)

    sample = GcgSample(
        sample_id=job.job_id,
        video=job.video,
        question=job.question,
        answer=answer,
        objects=dict(job.objects),
    )
    job.set_status("needs_review")
    return _finish(job, sample, flags, chat, videolmm, workdir)


def run_stream_b(
    job: PipelineJob,
    chat: CachedChat,
    videolmm: CachedChat,
    seg,
    *,
    workdir=None,
    frame_segments: int = 8,
) -> StreamResult:
    """Boxes + reference caption: refine the caption, segment the boxes."""
    if job.stream != "B":
        raise ValueError(f"job {job.job_id!r} is stream {job.stream}, not B")
    if not job.boxes or job.reference_caption is None:
        raise ValueError(f"stream B job {job.job_id!r} needs boxes and a reference caption")
    gt_caption = parse(job.reference_caption, Dialect.ID_SEG)  # precondition check
    job.set_status("running")
    workdir = Path(workdir) if workdir else None

    picked = _subset(list(range(job.video.frames)), frame_segments)
    aux = videolmm.call(
        "aux_dense_caption", prompts.aux_dense_prompt(),
        images=_frame_bytes(job.video, picked),
    )
    reply = chat.call(
        "b_refine_caption",
        prompts.refine_caption_prompt(job.reference_caption, [aux]),
        validate=_caption_validator("refined_caption", Dialect.ID_SEG),
    )
    answer = parse(_extract_caption(reply, "refined_caption"), Dialect.ID_SEG)

    flags = []
    dropped = set(gt_caption.binding_ids()) - set(answer.binding_ids())
    for oid in sorted(dropped):
        flags.append(f"{FLAG_BINDING_GAP}: refined caption dropped [SEG:{oid}]")

    sample = _segment_and_assemble(job, answer, seg, flags)
    job.set_status("needs_review")
    return _finish(job, sample, flags, chat, videolmm, workdir)


def run_stream_c(
    job: PipelineJob,
    chat: CachedChat,
    seg,
    *,
    workdir=None,
) -> StreamResult:
    """Boxes + referring expressions: relation prompt, bracket captions."""
    if job.stream != "C":
        raise ValueError(f"job {job.job_id!r} is stream {job.stream}, not C")
    if not job.boxes or not job.relations:
        raise ValueError(f"stream C job {job.job_id!r} needs boxes and relations")
    job.set_status("running")
    workdir = Path(workdir) if workdir else None

    reply = chat.call(
        "c_relation_caption",
        prompts.relation_caption_prompt(job.relations),
        validate=_caption_validator("caption", Dialect.BRACKET),
    )
    bracket = parse(_extract_caption(reply, "caption"), Dialect.BRACKET)
    answer = parse(serialize(bracket, Dialect.ID_SEG), Dialect.ID_SEG)

    categories = {}
    for rel in job.relations:
        categories.setdefault(rel.subject_id, rel.subject_category)
        categories.setdefault(rel.object_id, rel.object_category)
    flags = []
    for oid in sorted(set(answer.binding_ids()) - set(categories)):
        flags.append(f"{FLAG_BINDING_GAP}: caption cites id {oid} outside the relations")

    sample = _segment_and_assemble(job, answer, seg, flags, categories)
    job.set_status("needs_review")
    return _finish(job, sample, flags, chat, None, workdir)


def _segment_and_assemble(job, answer, seg, flags, categories=None) -> GcgSample:
    """Fetch masks for the job's boxes and build the draft sample."""
    masks = seg.segment(
        frames=list(job.video.frame_paths),
        boxes=job.boxes,
        height=job.video.height,
        width=job.video.width,
    )
    cited = set(answer.binding_ids())
    surfaces = _first_surfaces(answer)
    objects = {}
    for oid in sorted(cited):
        frames = masks.get(oid)
        if not frames:
            flags.append(
                f"{FLAG_BINDING_GAP}: no masks returned for cited object {oid}"
            )
            continue
        category = (categories or {}).get(oid) or surfaces.get(oid, f"object {oid}")
        objects[oid] = ObjectAnnotation(category, MaskTrack(dict(frames)))
    for oid in sorted(set(masks) - cited):
        flags.append(f"{FLAG_BINDING_GAP}: masks for object {oid} are never cited")
    return GcgSample(
        sample_id=job.job_id,
        video=job.video,
        question=job.question,
        answer=answer,
        objects=objects,
    )


def _render_or_draw(job, boxes, out_dir, label, frame_indices):
    """Render overlays (persisting them when a workdir is given) and return
    the overlay PNG bytes for the chat attachment."""
    if out_dir is not None:
        paths = render_overlays(
            job.video, out_dir, boxes=boxes, label=label, frame_indices=frame_indices
        )
        return tuple(p.read_bytes() for p in paths)
    images = []
    for f in frame_indices:
        with Image.open(frame_path(job.video, f)) as img:
            shapes = {
                oid: {"box": per_frame[f]}
                for oid, per_frame in boxes.items()
                if f in per_frame
            }
            images.append(_png_bytes(overlay_frame(img, shapes, label=label)))
    return tuple(images)


# ------------------------------------------------------------------ plumbing

def _finish(job, sample, flags, chat, videolmm, workdir) -> StreamResult:
    provenance = [step.to_record() for step in chat.log]
    if videolmm is not None:
        provenance.extend(step.to_record() for step in videolmm.log)
    result = StreamResult(
        sample=sample, flags=list(flags), status=job.status, provenance=provenance
    )
    if workdir is not None:
        job_dir = Path(workdir) / job.job_id
        job_dir.mkdir(parents=True, exist_ok=True)
        _write_once(job_dir / "sample.json", dumps_sample(sample) + "\n")
        _write_once(
            job_dir / "provenance.json",
            json.dumps(
                {"job_id": job.job_id, "stream": job.stream, "seed": job.seed,
                 "flags": result.flags, "steps": provenance},
                ensure_ascii=False, indent=2,
            ) + "\n",
        )
    return result


def _write_once(path: Path, text: str) -> None:
    # artifacts are immutable; an existing file is left untouched
    if path.exists():
        return
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def run_job(
    job: PipelineJob,
    *,
    chat_client,
    videolmm_client=None,
    seg_client=None,
    cache: PromptCache | None = None,
    workdir=None,
    frame_segments: int = 8,
) -> StreamResult:
    """Dispatch one job to its stream with fresh provenance logs."""
    chat = CachedChat(chat_client, cache)
    videolmm = CachedChat(videolmm_client, cache) if videolmm_client else None
    try:
        if job.stream == "A":
            if videolmm is None:
                raise ValueError("stream A needs a second video-LMM client")
            return run_stream_a(
                job, chat, videolmm, workdir=workdir, frame_segments=frame_segments
            )
        if job.stream == "B":
            if videolmm is None or seg_client is None:
                raise ValueError("stream B needs a video-LMM client and a seg client")
            return run_stream_b(
                job, chat, videolmm, seg_client,
                workdir=workdir, frame_segments=frame_segments,
            )
        if seg_client is None:
            raise ValueError("stream C needs a seg client")
        return run_stream_c(job, chat, seg_client, workdir=workdir)
    except Exception:
        job.status = "failed"
        raise


def run_jobs(jobs, *, workers: int = 1, **kwargs) -> list[StreamResult]:
    """Run jobs on a bounded pool; results come back in input order."""
    if workers <= 1:
        return [run_job(job, **kwargs) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda j: run_job(j, **kwargs), jobs))
