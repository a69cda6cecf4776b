import json

import pytest

from conftest import FIXTURE_COUNTS, build_fixture_samples
from videoground.dataset import (
    DatasetStats,
    dumps_sample,
    load_dataset,
    load_predictions,
    sample_from_record,
    sample_segmentwise,
    sample_to_record,
    save_dataset,
    stats,
)
from videoground.errors import (
    InvalidSegmentation,
    InvariantViolation,
    SchemaError,
)


class TestLoad:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert load_dataset(path) == []

    def test_fixture_roundtrip(self, fixture_dataset):
        samples = load_dataset(fixture_dataset)
        assert [s.sample_id for s in samples] == ["fix-000", "fix-001", "fix-002"]

    def test_load_save_identity(self, tmp_path, fixture_samples):
        first = tmp_path / "a.jsonl"
        second = tmp_path / "b.jsonl"
        save_dataset(fixture_samples, first)
        save_dataset(load_dataset(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_dangling_binding_is_invariant_violation(self, tmp_path, fixture_samples):
        record = sample_to_record(fixture_samples[1])
        record["answer"] = record["answer"].replace("[SEG:3]", "[SEG:9]")
        record["objects"] = {"3": record["objects"]["3"]}
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(InvariantViolation) as err:
            load_dataset(path)
        assert err.value.failures[0][0] == 1

    def test_unreferenced_object_rejected(self, tmp_path, fixture_samples):
        record = sample_to_record(fixture_samples[0])
        record["answer"] = "a <p> red ball </p> [SEG:0] bounces alone"
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(InvariantViolation):
            load_dataset(path)

    def test_structural_error_wins(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text("{not json}\n")
        with pytest.raises(SchemaError):
            load_dataset(path)

    def test_missing_field(self, tmp_path, fixture_samples):
        record = sample_to_record(fixture_samples[0])
        del record["question"]
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(SchemaError):
            load_dataset(path)

    def test_failures_carry_line_numbers(self, tmp_path, fixture_samples):
        good = dumps_sample(fixture_samples[0])
        path = tmp_path / "mixed.jsonl"
        path.write_text(good + "\n" + "{broken\n" + good.replace("fix-000", "fix-zzz") + "\n")
        with pytest.raises(SchemaError) as err:
            load_dataset(path)
        assert [n for n, _ in err.value.failures] == [2]

    def test_mask_too_large_for_video(self, tmp_path, fixture_samples):
        record = sample_to_record(fixture_samples[1])
        # a frame index beyond the declared frame count
        track = record["objects"]["3"]["track"]
        track["99"] = next(iter(track.values()))
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(InvariantViolation):
            load_dataset(path)


class TestPredictionsLoader:
    def test_bad_lines_become_diagnostics(self, tmp_path, fixture_samples):
        path = tmp_path / "pred.jsonl"
        path.write_text("{broken\n" + dumps_sample(fixture_samples[0]) + "\n")
        preds, diagnostics = load_predictions(path)
        assert set(preds) == {"fix-000"}
        assert len(diagnostics) == 1


class TestStats:
    def test_fixture_counts(self, fixture_samples):
        assert stats(fixture_samples) == DatasetStats(*FIXTURE_COUNTS)

    def test_empty(self):
        assert stats([]) == DatasetStats(0, 0, 0)

    def test_additive_under_concat(self, fixture_samples):
        once = stats(fixture_samples)
        twice = stats(fixture_samples + build_fixture_samples())
        assert twice == DatasetStats(once.triplets * 2, once.objects * 2, once.masks * 2)


class TestSegmentwise:
    def test_even_split(self):
        assert sample_segmentwise(8, 2) == [[0, 1, 2, 3], [4, 5, 6, 7]]

    def test_remainder_to_last(self):
        assert sample_segmentwise(7, 3) == [[0, 1], [2, 3], [4, 5, 6]]

    def test_singletons(self):
        assert sample_segmentwise(4, 4) == [[0], [1], [2], [3]]

    def test_zero_segments(self):
        with pytest.raises(InvalidSegmentation):
            sample_segmentwise(4, 0)

    def test_too_many_segments(self):
        with pytest.raises(InvalidSegmentation):
            sample_segmentwise(3, 4)

    def test_exact_partition(self):
        for t in range(1, 40):
            for k in range(1, t + 1):
                segments = sample_segmentwise(t, k)
                assert len(segments) == k
                flat = [i for seg in segments for i in seg]
                assert flat == list(range(t))


def test_record_field_order_stable(fixture_samples):
    record = sample_to_record(fixture_samples[0])
    assert list(record) == ["sample_id", "video", "question", "answer", "objects"]
    assert list(record["video"]) == [
        "source", "clip_id", "frames", "width", "height", "frame_paths",
    ]


def test_sample_from_record_rejects_non_object():
    with pytest.raises(SchemaError):
        sample_from_record(["not", "a", "record"])
