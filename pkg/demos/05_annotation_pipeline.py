"""
The annotation pipeline, offline
================================

Runs the relation-driven stream (boxes + referring expressions) against
an in-process fake chat service and the box-interior segmentation mock,
shows the exact prompt sent, and demonstrates reply caching and the
review pass.
"""
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from videoground import BoundingBox, VideoRef, rle_encode, rle_to_string
from videoground.pipeline import PipelineJob, Relation, apply_review, run_job
from videoground.pipeline.review import ReviewDecision
from videoground.services import ChatClient, PromptCache, SegClient

print("The annotation pipeline, offline")
print("=" * 40)

###############################################################################
# Fake services: the chat endpoint always answers the relation prompt with
# a bracket-dialect caption, the segmentation endpoint fills box interiors.

REPLY = '{"caption": "there is a [white rabbit](0) leaning on an [adult](1) by the water"}'


def chat_transport(url, headers, payload, timeout):
    return 200, {"choices": [{"message": {"content": REPLY}}]}


def seg_transport(url, headers, payload, timeout):
    out = {}
    for oid, per_frame in payload["boxes"].items():
        frames = {}
        for f, (x, y, w, h) in per_frame.items():
            mask = np.zeros((8, 8), dtype=bool)
            mask[y:y + h, x:x + w] = True
            frames[f] = rle_to_string(rle_encode(mask))
        out[oid] = frames
    return 200, out


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    frames = []
    for i in range(2):
        path = tmp / f"frame_{i:05d}.png"
        Image.new("RGB", (8, 8), (12, 40 + 30 * i, 90)).save(path)
        frames.append(str(path))

    job = PipelineJob(
        job_id="demo-c-0",
        stream="C",
        video=VideoRef("demo", "rabbit-clip", 2, 8, 8, tuple(frames)),
        boxes={
            0: {0: BoundingBox(1, 1, 2, 2), 1: BoundingBox(2, 1, 2, 2)},
            1: {0: BoundingBox(4, 4, 3, 3)},
        },
        relations=(
            Relation(0, "rabbit", 1, "adult", "lean_on",
                     "there is a white rabbit leaning on an adult by the water"),
        ),
    )

    cache = PromptCache(tmp / "cache")
    chat = ChatClient("http://chat.local/v1", "demo-chat", transport=chat_transport)
    seg = SegClient("http://seg.local", transport=seg_transport)

    result = run_job(
        job, chat_client=chat, seg_client=seg, cache=cache, workdir=tmp / "work"
    )

    print(f"status: {result.status}")
    print(f"answer (plain): {result.sample.answer.plain!r}")
    print(f"objects: {{id: category}} = "
          f"{ {oid: ann.category for oid, ann in result.sample.objects.items()} }")
    print(f"review flags: {result.flags or 'none'}")

    step = result.provenance[0]
    print(f"\nfirst prompt sent ({step['template_id']}), last 3 lines:")
    for line in step["prompt"].splitlines()[-3:]:
        print(f"  | {line}")

    ###########################################################################
    # Re-running the same job against the warm cache touches no service.

    job2 = PipelineJob(
        job_id="demo-c-0", stream="C", video=job.video,
        boxes=job.boxes, relations=job.relations,
    )
    result2 = run_job(
        job2, chat_client=chat, seg_client=seg, cache=cache, workdir=tmp / "work2"
    )
    hits = [s["cache_hit"] for s in result2.provenance]
    print(f"\nsecond run cache hits: {hits}")

    ###########################################################################
    # Human review: accept the draft into the finalized dataset.

    reviewed = apply_review([result2.sample], [ReviewDecision("demo-c-0", "accept")])
    print(f"finalized samples: {sorted(reviewed.sample_ids())}")
