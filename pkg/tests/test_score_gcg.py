import json

import pytest

from conftest import build_fixture_samples
from videoground.dataset import save_dataset
from videoground.gcg import score_gcg


class FakeJudge:
    def __init__(self, score=90):
        self.score = score
        self.calls = 0

    def chat(self, prompt, images=(), temperature=0.0):
        self.calls += 1
        return json.dumps({"score": self.score, "reason": "mock"})


@pytest.fixture
def gt_file(tmp_path):
    path = tmp_path / "gt.jsonl"
    save_dataset(build_fixture_samples(), path)
    return path


class TestScoreGcg:
    def test_gt_against_itself_is_perfect(self, gt_file):
        report = score_gcg(gt_file, gt_file)
        assert report.miou == 1.0
        assert report.recall == 1.0
        assert report.meteor >= 0.99
        assert report.cider == pytest.approx(10.0, abs=1e-9)
        assert report.clair is None  # no judge configured

    def test_empty_predictions_zero(self, gt_file, tmp_path):
        empty = tmp_path / "pred.jsonl"
        empty.write_text("")
        report = score_gcg(empty, gt_file)
        assert report.miou == 0.0
        assert report.recall == 0.0
        assert len(report.diagnostics) >= 3  # one per missing sample

    def test_broken_prediction_line_is_diagnostic(self, gt_file, tmp_path):
        pred = tmp_path / "pred.jsonl"
        lines = gt_file.read_text().splitlines()
        pred.write_text(lines[0] + "\n{broken json\n" + lines[2] + "\n")
        report = score_gcg(pred, gt_file)
        assert any("line 2" in d for d in report.diagnostics)
        assert 0.0 < report.miou < 1.0  # one sample missing, two perfect

    def test_judge_adds_clair(self, gt_file):
        judge = FakeJudge(score=88)
        report = score_gcg(gt_file, gt_file, judge=judge)
        assert report.clair == 88.0
        assert judge.calls == 3
        assert report.clair_prompt is not None

    def test_report_json_has_table1_fields(self, gt_file):
        report = score_gcg(gt_file, gt_file)
        payload = json.loads(report.to_json())
        for key in ("miou", "recall", "meteor", "cider", "clair"):
            assert key in payload
        assert len(payload["per_sample"]) == 3

    def test_human_table_column_order(self, gt_file):
        report = score_gcg(gt_file, gt_file)
        header = report.human_table().splitlines()[0].split()
        assert header == ["mIoU", "Recall", "METEOR", "CIDEr", "CLAIR"]

    def test_workers_do_not_change_result(self, gt_file):
        serial = score_gcg(gt_file, gt_file)
        parallel = score_gcg(gt_file, gt_file, workers=4)
        assert serial.miou == parallel.miou
        assert serial.recall == parallel.recall
        assert serial.meteor == pytest.approx(parallel.meteor)
        assert serial.cider == pytest.approx(parallel.cider)
