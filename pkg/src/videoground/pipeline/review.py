"""Human review pass: accept, reject, or edit drafted samples.

Decisions arrive as tab-separated lines ``sample_id<TAB>action[<TAB>edited
answer]``. Accepted and successfully edited samples must satisfy every
dataset invariant before they count as done; objects an edit stops citing
are pruned (with a note) so the finalized record stays internally
consistent. Rejections leave a tombstone, and re-applying the same
decision list is a no-op on an already-reviewed dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..captions import Dialect, parse
from ..dataset import GcgSample, validate_sample
from ..errors import CaptionParseError, InvalidEdit, InvariantViolation, UnknownSample

__all__ = ["ReviewDecision", "ReviewedDataset", "read_decisions", "apply_review"]

_ACTIONS = ("accept", "reject", "edit")


@dataclass(frozen=True)
class ReviewDecision:
    sample_id: str
    action: str
    edited_answer: str | None = None

    def __post_init__(self):
        if self.action not in _ACTIONS:
            raise ValueError(f"unknown review action {self.action!r}")
        if self.action == "edit" and not self.edited_answer:
            raise ValueError("edit decisions need the edited answer text")


@dataclass
class ReviewedDataset:
    """Finalized samples plus tombstones for rejected ones."""

    samples: list[GcgSample] = field(default_factory=list)
    tombstones: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def sample_ids(self) -> set[str]:
        return {s.sample_id for s in self.samples}


def read_decisions(path) -> list[ReviewDecision]:
    decisions = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise ValueError(f"line {lineno}: expected at least sample_id<TAB>action")
            sample_id, action = parts[0], parts[1]
            edited = parts[2] if len(parts) > 2 and parts[2] else None
            decisions.append(ReviewDecision(sample_id, action, edited))
    return decisions


def _apply_edit(sample: GcgSample, edited_answer: str) -> tuple[GcgSample, list[str]]:
    try:
        answer = parse(edited_answer, Dialect.ID_SEG)
    except CaptionParseError as exc:
        raise InvalidEdit(f"edit for {sample.sample_id!r} does not parse: {exc}") from exc
    cited = set(answer.binding_ids())
    unknown = cited - set(sample.objects)
    if unknown:
        raise InvalidEdit(
            f"edit for {sample.sample_id!r} cites unknown objects {sorted(unknown)}"
        )
    notes = []
    objects = dict(sample.objects)
    for oid in sorted(set(objects) - cited):
        del objects[oid]
        notes.append(
            f"{sample.sample_id}: object {oid} pruned, the edit no longer cites it"
        )
    return replace(sample, answer=answer, objects=objects), notes


def apply_review(samples, decisions) -> ReviewedDataset:
    """Apply decisions to drafted samples (or to a ReviewedDataset).

    Accept and edit finalize a sample (edits are re-validated); reject
    drops it behind a tombstone. Unknown sample ids raise, except for
    rejections of already-tombstoned samples, which keeps the operation
    idempotent over one decision list.
    """
    if isinstance(samples, ReviewedDataset):
        current = {s.sample_id: s for s in samples.samples}
        tombstones = {t["sample_id"]: t for t in samples.tombstones}
        notes = list(samples.notes)
    else:
        current = {s.sample_id: s for s in samples}
        tombstones = {}
        notes = []

    for decision in decisions:
        sid = decision.sample_id
        if sid not in current:
            if decision.action == "reject" and sid in tombstones:
                continue
            raise UnknownSample(f"no sample {sid!r} to review")
        if decision.action == "reject":
            del current[sid]
            tombstones[sid] = {"sample_id": sid, "action": "reject"}
            continue
        sample = current[sid]
        if decision.action == "edit":
            sample, edit_notes = _apply_edit(sample, decision.edited_answer)
            notes.extend(edit_notes)
        try:
            validate_sample(sample)
        except InvariantViolation as exc:
            if decision.action == "edit":
                raise InvalidEdit(f"edit for {sid!r} leaves the sample invalid: {exc}") from exc
            raise
        current[sid] = sample

    return ReviewedDataset(
        samples=[current[sid] for sid in sorted(current)],
        tombstones=[tombstones[sid] for sid in sorted(tombstones)],
        notes=notes,
    )
