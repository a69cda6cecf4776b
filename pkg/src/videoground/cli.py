"""Command-line entry point.

Subcommands: score-gcg, score-vos, score-grounding, validate-dataset,
stats, render-overlays, pipeline-run, apply-review. Exit codes: 0 on
success, 1 on validation or scoring failure, 2 on usage errors. Reports
print as human tables mirroring the benchmark layouts and are also
written as JSON when --out is given.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from .dataset import load_dataset, save_dataset, stats
from .errors import DatasetError, VideogroundError
from .gcg import score_gcg
from .pipeline import apply_review, read_decisions, render_overlays
from .pipeline.jobs import load_jobs
from .pipeline.streams import run_jobs
from .services import ChatClient, PromptCache, SegClient
from .vos import score_grounding, score_vos

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="videoground",
        description="Pixel-grounded video conversation benchmark toolkit.",
    )
    parser.add_argument(
        "--workers", type=int, default=os.cpu_count() or 1,
        help="worker pool width (default: available parallelism)",
    )
    parser.add_argument(
        "--seed", type=int, default=0,
        help="seed for all stochastic behavior (default: 0)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score-gcg", help="score grounded conversation predictions")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--recall-threshold", type=float, default=0.5,
                   help="IoU gate for recall (default: 0.5)")
    p.add_argument("--judge", action="store_true",
                   help="also compute the judge-rated score (needs CHAT_* env)")
    p.add_argument("--out", help="write the JSON report here")

    p = sub.add_parser("score-vos", help="score referring video segmentation")
    p.add_argument("--pred", required=True, help="record file or mask directory")
    p.add_argument("--gt", required=True, help="record file or mask directory")
    p.add_argument("--out")

    p = sub.add_parser("score-grounding", help="score mask-box visual grounding")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out")

    p = sub.add_parser("validate-dataset", help="exit 0 iff the dataset is fully valid")
    p.add_argument("--data", required=True)

    p = sub.add_parser("stats", help="print triplet / object / mask counts")
    p.add_argument("--data", required=True)
    p.add_argument("--out")

    p = sub.add_parser("render-overlays", help="draw object overlays for one sample")
    p.add_argument("--data", required=True)
    p.add_argument("--sample-id", required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("pipeline-run", help="run annotation jobs through their streams")
    p.add_argument("--jobs", required=True, help="JSONL job descriptions")
    p.add_argument("--out", required=True, help="directory for drafted samples")
    p.add_argument("--cache", help="reply cache directory")
    p.add_argument("--seg-url", help="segmentation service base URL")
    p.add_argument("--frame-segments", type=int, default=8,
                   help="segments per video for LMM frame selection (default: 8)")

    p = sub.add_parser("apply-review", help="apply review decisions to drafted samples")
    p.add_argument("--data", required=True)
    p.add_argument("--decisions", required=True, help="TSV: sample_id, action, [edit]")
    p.add_argument("--out", required=True, help="finalized dataset path")
    p.add_argument("--tombstones", help="where rejected sample ids are listed")

    return parser


def _write_out(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text + ("\n" if not text.endswith("\n") else ""),
                              encoding="utf-8")


def _cmd_score_gcg(args) -> int:
    judge = None
    if args.judge:
        judge = ChatClient.from_env("CHAT")
    report = score_gcg(
        args.pred, args.gt,
        recall_threshold=args.recall_threshold,
        judge=judge,
        workers=args.workers,
    )
    print(report.human_table())
    for line in report.diagnostics:
        print(f"note: {line}", file=sys.stderr)
    _write_out(args.out, report.to_json())
    return 0


def _cmd_score_vos(args) -> int:
    score = score_vos(args.pred, args.gt)
    print(score.human_table())
    for line in score.diagnostics:
        print(f"note: {line}", file=sys.stderr)
    _write_out(args.out, score.to_json())
    return 0


def _cmd_score_grounding(args) -> int:
    miou, diagnostics = score_grounding(args.pred, args.gt)
    print(f"{'mask-box mIoU':>14}")
    print(f"{miou:14.4f}")
    for line in diagnostics:
        print(f"note: {line}", file=sys.stderr)
    _write_out(args.out, json.dumps({"grounding_miou": miou,
                                     "diagnostics": diagnostics}, indent=2))
    return 0


def _cmd_validate(args) -> int:
    try:
        samples = load_dataset(args.data)
    except DatasetError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    print(f"ok: {len(samples)} valid record(s)")
    return 0


def _cmd_stats(args) -> int:
    counts = stats(load_dataset(args.data))
    print(f"{counts.triplets} / {counts.objects} / {counts.masks}")
    _write_out(args.out, json.dumps(
        {"triplets": counts.triplets, "objects": counts.objects, "masks": counts.masks},
        indent=2,
    ))
    return 0


def _cmd_render_overlays(args) -> int:
    samples = {s.sample_id: s for s in load_dataset(args.data)}
    if args.sample_id not in samples:
        print(f"no sample {args.sample_id!r} in {args.data}", file=sys.stderr)
        return 1
    sample = samples[args.sample_id]
    written = render_overlays(
        sample.video, args.out,
        masks={oid: ann.track for oid, ann in sample.objects.items()},
    )
    print(f"wrote {len(written)} overlay frame(s) to {args.out}")
    return 0


def _cmd_pipeline_run(args) -> int:
    jobs = load_jobs(args.jobs)
    random.seed(args.seed)
    chat = ChatClient.from_env("CHAT")
    try:
        videolmm = ChatClient.from_env("VIDEOLMM")
    except VideogroundError:
        videolmm = None
    seg = SegClient(args.seg_url) if args.seg_url else None
    cache = PromptCache(args.cache) if args.cache else None
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = run_jobs(
        jobs,
        workers=args.workers,
        chat_client=chat,
        videolmm_client=videolmm,
        seg_client=seg,
        cache=cache,
        workdir=out_dir,
        frame_segments=args.frame_segments,
    )
    flagged = sum(1 for r in results if r.flags)
    print(f"ran {len(results)} job(s), {flagged} flagged for review")
    return 0


def _cmd_apply_review(args) -> int:
    samples = load_dataset(args.data)
    decisions = read_decisions(args.decisions)
    reviewed = apply_review(samples, decisions)
    save_dataset(reviewed.samples, args.out)
    if args.tombstones:
        with open(args.tombstones, "w", encoding="utf-8") as f:
            for stone in reviewed.tombstones:
                f.write(json.dumps(stone) + "\n")
    for note in reviewed.notes:
        print(f"note: {note}", file=sys.stderr)
    print(
        f"finalized {len(reviewed.samples)} sample(s), "
        f"{len(reviewed.tombstones)} rejected"
    )
    return 0


_COMMANDS = {
    "score-gcg": _cmd_score_gcg,
    "score-vos": _cmd_score_vos,
    "score-grounding": _cmd_score_grounding,
    "validate-dataset": _cmd_validate,
    "stats": _cmd_stats,
    "render-overlays": _cmd_render_overlays,
    "pipeline-run": _cmd_pipeline_run,
    "apply-review": _cmd_apply_review,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return _COMMANDS[args.command](args)
    except VideogroundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
