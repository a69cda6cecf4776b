"""Grounded conversation generation scoring.

Predictions and ground truth share the dataset record format. Objects
are matched per sample by an optimal one-to-one assignment on volumetric
track IoU (the least gameable protocol and the one an exhaustive search
can verify), ground-truth objects left unmatched contribute IoU 0, and
surplus predictions only compete inside the matching pool. Caption
quality uses METEOR / CIDEr on the tag-stripped texts plus the optional
judge-rated CLAIR score.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .dataset import GcgSample, load_dataset, load_predictions
from .errors import CorpusTooSmall, DimensionMismatch
from .textmetrics import (
    CLAIR_JUDGE_TEMPLATE,
    cider_per_item,
    clair_score,
    meteor,
)
from .tracks import MaskTrack, track_iou

__all__ = [
    "ObjectMatch",
    "optimal_assignment",
    "match_objects",
    "gcg_miou",
    "gcg_recall",
    "ScoreReport",
    "score_gcg",
]


@dataclass(frozen=True)
class ObjectMatch:
    gt_id: int
    pred_id: int | None
    iou: float


def optimal_assignment(iou_matrix) -> list[tuple[int, int | None]]:
    """Row-to-column assignment maximizing total IoU.

    Every row (ground-truth object) appears exactly once, matched to a
    distinct column or to None when columns run out.
    """
    matrix = np.asarray(iou_matrix, dtype=float)
    if matrix.size == 0:
        n_rows = matrix.shape[0] if matrix.ndim else 0
        return [(i, None) for i in range(n_rows)]
    matrix = np.atleast_2d(matrix)
    n_rows = matrix.shape[0]
    rows, cols = linear_sum_assignment(matrix, maximize=True)
    chosen = dict(zip(rows.tolist(), cols.tolist()))
    return [(i, chosen.get(i)) for i in range(n_rows)]


def match_objects(
    pred_tracks: dict[int, MaskTrack], gt_tracks: dict[int, MaskTrack]
) -> list[ObjectMatch]:
    """Assign predicted tracks to ground-truth tracks, one-to-one.

    Tracks whose geometry disagrees with the ground truth score 0 against
    everything rather than failing the whole sample.
    """
    gt_ids = sorted(gt_tracks)
    pred_ids = sorted(pred_tracks)
    if not gt_ids:
        return []
    if not pred_ids:
        return [ObjectMatch(g, None, 0.0) for g in gt_ids]
    matrix = np.zeros((len(gt_ids), len(pred_ids)))
    for i, g in enumerate(gt_ids):
        for j, p in enumerate(pred_ids):
            try:
                matrix[i, j] = track_iou(gt_tracks[g], pred_tracks[p])
            except DimensionMismatch:
                matrix[i, j] = 0.0
    out = []
    for i, j in optimal_assignment(matrix):
        if j is None:
            out.append(ObjectMatch(gt_ids[i], None, 0.0))
        else:
            out.append(ObjectMatch(gt_ids[i], pred_ids[j], float(matrix[i, j])))
    return out


def gcg_miou(per_sample_matches: list[list[ObjectMatch]]) -> float:
    """Mean assigned IoU per sample, averaged over samples with objects."""
    means = [
        sum(m.iou for m in matches) / len(matches)
        for matches in per_sample_matches
        if matches
    ]
    return sum(means) / len(means) if means else 0.0


def gcg_recall(per_sample_matches: list[list[ObjectMatch]], threshold: float = 0.5) -> float:
    """Fraction of ground-truth objects whose assigned IoU reaches the
    threshold; samples without objects contribute nothing."""
    total = sum(len(m) for m in per_sample_matches)
    if total == 0:
        return 0.0
    hits = sum(1 for matches in per_sample_matches for m in matches if m.iou >= threshold)
    return hits / total


@dataclass
class ScoreReport:
    """Metric bundle plus per-sample breakdown for a scoring run."""

    miou: float
    recall: float
    meteor: float
    cider: float | None
    clair: float | None
    recall_threshold: float
    per_sample: list[dict] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    clair_prompt: str | None = None
    notes: tuple[str, ...] = (
        "recall gates on IoU only",
        "matching: optimal one-to-one assignment on volumetric track IoU",
    )

    def to_json(self) -> str:
        return json.dumps(
            {
                "miou": self.miou,
                "recall": self.recall,
                "meteor": self.meteor,
                "cider": self.cider,
                "clair": self.clair,
                "recall_threshold": self.recall_threshold,
                "notes": list(self.notes),
                "clair_prompt": self.clair_prompt,
                "per_sample": self.per_sample,
                "diagnostics": self.diagnostics,
            },
            ensure_ascii=False,
            indent=2,
        )

    def human_table(self) -> str:
        header = f"{'mIoU':>8} {'Recall':>8} {'METEOR':>8} {'CIDEr':>8} {'CLAIR':>8}"
        cider_text = f"{self.cider:8.3f}" if self.cider is not None else f"{'-':>8}"
        clair_text = f"{self.clair:8.1f}" if self.clair is not None else f"{'-':>8}"
        row = f"{self.miou:8.3f} {self.recall:8.3f} {self.meteor:8.3f} {cider_text} {clair_text}"
        return f"{header}\n{row}"


def _score_sample(pred: GcgSample | None, gt: GcgSample):
    matches = match_objects(pred.tracks() if pred else {}, gt.tracks())
    candidate = pred.answer.plain if pred else ""
    met = meteor(candidate, [gt.answer.plain])
    return matches, candidate, met


def score_gcg(
    pred_path,
    gt_path,
    *,
    recall_threshold: float = 0.5,
    judge=None,
    workers: int | None = None,
) -> ScoreReport:
    """Score a prediction file against a ground-truth file.

    Unparseable predictions count as missing (scored 0) and are listed in
    the report diagnostics. CLAIR runs only when a judge client is given.
    """
    gt_samples = load_dataset(gt_path)
    preds, diagnostics = load_predictions(pred_path)

    def work(gt):
        return _score_sample(preds.get(gt.sample_id), gt)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, gt_samples))
    else:
        results = [work(gt) for gt in gt_samples]

    per_sample_matches = [r[0] for r in results]
    meteors = [r[2] for r in results]

    cider_value = None
    cider_items: list[float] = []
    try:
        cider_items = cider_per_item(
            [(cand, [gt.answer.plain]) for (_, cand, _), gt in zip(results, gt_samples)]
        )
        cider_value = sum(cider_items) / len(cider_items)
    except CorpusTooSmall as exc:
        diagnostics.append(f"cider skipped: {exc}")

    clair_value = None
    clair_items: list[float | None] = [None] * len(gt_samples)
    if judge is not None:
        for i, ((_, cand, _), gt) in enumerate(zip(results, gt_samples)):
            clair_items[i] = clair_score(cand, [gt.answer.plain], judge)
        clair_value = sum(clair_items) / len(clair_items) if clair_items else None

    per_sample = []
    for i, (gt, (matches, _, met)) in enumerate(zip(gt_samples, results)):
        missing = gt.sample_id not in preds
        if missing:
            diagnostics.append(f"no prediction for sample {gt.sample_id!r}")
        entry = {
            "sample_id": gt.sample_id,
            "matches": [
                {"gt_id": m.gt_id, "pred_id": m.pred_id, "iou": m.iou} for m in matches
            ],
            "miou": (sum(m.iou for m in matches) / len(matches)) if matches else None,
            "meteor": met,
        }
        if cider_items:
            entry["cider"] = cider_items[i]
        if clair_items[i] is not None:
            entry["clair"] = clair_items[i]
        per_sample.append(entry)

    return ScoreReport(
        miou=gcg_miou(per_sample_matches),
        recall=gcg_recall(per_sample_matches, recall_threshold),
        meteor=sum(meteors) / len(meteors) if meteors else 0.0,
        cider=cider_value,
        clair=clair_value,
        recall_threshold=recall_threshold,
        per_sample=per_sample,
        diagnostics=diagnostics,
        clair_prompt=CLAIR_JUDGE_TEMPLATE if judge is not None else None,
    )
