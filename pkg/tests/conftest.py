"""Shared fixture builders: synthetic datasets, frames, fake services."""

import numpy as np
import pytest

from videoground.captions import Dialect, parse
from videoground.dataset import (
    GcgSample,
    ObjectAnnotation,
    VideoRef,
    save_dataset,
)
from videoground.masks import rle_encode
from videoground.tracks import MaskTrack


def block_mask(h, w, y0, y1, x0, x1):
    m = np.zeros((h, w), dtype=bool)
    m[y0:y1, x0:x1] = True
    return m


def make_track(frame_to_mask):
    return MaskTrack({f: rle_encode(m) for f, m in frame_to_mask.items()})


def build_fixture_samples():
    """Three samples, five objects, twelve masks: the bundled synthetic set.

    Captions are deliberately distinct and at least four tokens long so
    the consensus metric keeps idf contrast and full n-gram coverage.
    """
    h = w = 8

    def obj(category, frames):
        return ObjectAnnotation(category, make_track(frames))

    s1 = GcgSample(
        sample_id="fix-000",
        video=VideoRef("synthetic", "clip-000", 3, w, h),
        question="What is happening in this video?",
        answer=parse(
            "a <p> red ball </p> [SEG:0] bounces past a <p> sleeping cat </p> [SEG:1]",
            Dialect.ID_SEG,
        ),
        objects={
            0: obj("ball", {0: block_mask(h, w, 0, 2, 0, 2), 1: block_mask(h, w, 1, 3, 1, 3)}),
            1: obj("cat", {0: block_mask(h, w, 4, 7, 4, 7), 1: block_mask(h, w, 4, 7, 4, 7),
                           2: block_mask(h, w, 4, 7, 3, 6)}),
        },
    )
    s2 = GcgSample(
        sample_id="fix-001",
        video=VideoRef("synthetic", "clip-001", 3, w, h),
        question="Who rides through the frame?",
        answer=parse(
            "a <p> cyclist in yellow </p> [SEG:3] rides through the narrow street",
            Dialect.ID_SEG,
        ),
        objects={
            3: obj("cyclist", {0: block_mask(h, w, 2, 5, 0, 3), 1: block_mask(h, w, 2, 5, 2, 5),
                               2: block_mask(h, w, 2, 5, 4, 7)}),
        },
    )
    s3 = GcgSample(
        sample_id="fix-002",
        video=VideoRef("synthetic", "clip-002", 2, w, h),
        question="Describe the kitchen scene.",
        answer=parse(
            "a <p> steaming kettle </p> [SEG:0] whistles beside a <p> wooden spoon </p> [SEG:7]",
            Dialect.ID_SEG,
        ),
        objects={
            0: obj("kettle", {0: block_mask(h, w, 0, 3, 5, 8), 1: block_mask(h, w, 0, 3, 5, 8)}),
            7: obj("spoon", {0: block_mask(h, w, 6, 8, 0, 4), 1: block_mask(h, w, 6, 8, 1, 5)}),
        },
    )
    return [s1, s2, s3]


FIXTURE_COUNTS = (3, 5, 12)  # triplets, objects, masks by construction


@pytest.fixture
def fixture_samples():
    return build_fixture_samples()


@pytest.fixture
def fixture_dataset(tmp_path):
    path = tmp_path / "fixture.jsonl"
    save_dataset(build_fixture_samples(), path)
    return path


class SequencedTransport:
    """Chat transport returning canned replies keyed by prompt matching.

    ``routes`` is a list of (predicate_or_substring, reply); the first
    match wins. A reply given as a list is consumed one element per call
    (its last element repeats once exhausted). Every request is recorded
    for prompt byte checks.
    """

    def __init__(self, routes):
        self.routes = [
            (matcher, list(reply) if isinstance(reply, list) else reply)
            for matcher, reply in routes
        ]
        self.requests = []

    def __call__(self, url, headers, payload, timeout):
        prompt = _payload_text(payload)
        self.requests.append({"url": url, "payload": payload, "prompt": prompt})
        for matcher, reply in self.routes:
            if callable(matcher):
                hit = matcher(prompt)
            else:
                hit = matcher in prompt
            if hit:
                if isinstance(reply, list):
                    text = reply.pop(0) if len(reply) > 1 else reply[0]
                else:
                    text = reply
                return 200, {"choices": [{"message": {"content": text}}]}
        raise AssertionError(f"no canned reply for prompt: {prompt[:120]!r}")


def _payload_text(payload):
    content = payload["messages"][0]["content"]
    if isinstance(content, str):
        return content
    return "".join(p["text"] for p in content if p.get("type") == "text")


class MockSegTransport:
    """Implements the box-interior mock of the segmentation wire contract."""

    def __init__(self, height, width):
        self.height = height
        self.width = width
        self.requests = []

    def __call__(self, url, headers, payload, timeout):
        self.requests.append({"url": url, "payload": payload})
        from videoground.masks import rle_to_string

        out = {}
        for oid, per_frame in payload["boxes"].items():
            frames = {}
            for f, (x, y, bw, bh) in per_frame.items():
                m = np.zeros((self.height, self.width), dtype=bool)
                m[y:y + bh, x:x + bw] = True
                frames[f] = rle_to_string(rle_encode(m))
            out[oid] = frames
        return 200, out
