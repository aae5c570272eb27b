"""Command line: single extraction and batch over a manifest.

Exit codes: 0 success, 1 extraction failure, 2 bad invocation.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Sequence

from . import serialize
from .errors import ExtractorError
from .extract import BackendSelection, ExtractionJob, run_extraction
from .video import DEFAULT_SAMPLING_FPS


def _err(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _selection(args: argparse.Namespace) -> BackendSelection:
    return BackendSelection(pose=args.pose, classifier=args.classifier)


def cmd_extract(args: argparse.Namespace) -> int:
    if not Path(args.video).exists():
        _err(f"video not found: {args.video}")
        return 2
    try:
        job = ExtractionJob(
            video_path=Path(args.video),
            prompt=args.prompt,
            out_path=Path(args.out),
            video_id=args.video_id or "",
            prompt_id=args.prompt_id,
            target_fps=args.fps,
            scenario_id=args.scenario,
            movement_mode=args.movement_mode,
            selection=_selection(args),
        )
    except ValueError as exc:
        _err(str(exc))
        return 2
    try:
        result = run_extraction(job)
    except ExtractorError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return 1
    for line in result.diagnostics:
        print(f"warning: {line}", file=sys.stderr)
    print(f"extracted {result.doc['frame_count']} frames -> {result.path}")
    return 0


def _load_prompt_texts(path: Path) -> dict[str, str]:
    texts: dict[str, str] = {}
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            texts[record["prompt_id"]] = record.get("text", "")
    return texts


def cmd_batch(args: argparse.Namespace) -> int:
    manifest = Path(args.manifest)
    if not manifest.exists():
        _err(f"manifest not found: {manifest}")
        return 2
    texts: dict[str, str] = {}
    if args.prompts:
        if not Path(args.prompts).exists():
            _err(f"prompt file not found: {args.prompts}")
            return 2
        texts = _load_prompt_texts(Path(args.prompts))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    failures = 0
    with manifest.open(encoding="utf-8") as handle:
        rows = [row for row in csv.reader(handle) if row and not row[0].startswith("#")]
    for row in rows:
        if len(row) != 3:
            _err(f"manifest row needs video,prompt_id,model_name: {row!r}")
            return 2
        video_path, prompt_id, model_name = (f.strip() for f in row)
        video_id = f"{prompt_id}-{model_name}"
        rel = f"{video_id}.json"
        job = ExtractionJob(
            video_path=Path(video_path),
            prompt=texts.get(prompt_id, ""),
            out_path=out_dir / rel,
            video_id=video_id,
            prompt_id=prompt_id,
            target_fps=args.fps,
            scenario_id=args.scenario,
            movement_mode=args.movement_mode,
            selection=_selection(args),
        )
        try:
            result = run_extraction(job)
        except ExtractorError as exc:
            _err(f"{video_id}: {type(exc).__name__}: {exc}")
            failures += 1
            continue
        for line in result.diagnostics:
            print(f"warning: {video_id}: {line}", file=sys.stderr)
        entries.append(
            {
                "video_id": video_id,
                "path": rel,
                "prompt_id": prompt_id,
                "model_name": model_name,
            }
        )
    index = serialize.build_index_doc(entries)
    (out_dir / "index.json").write_bytes(serialize.dump_index_doc(index))
    print(f"extracted {len(entries)} bundles ({failures} failed) -> {out_dir}")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vmx", description="Turn video clips into motion-evaluation feature bundles."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--fps", type=float, default=DEFAULT_SAMPLING_FPS)
        p.add_argument("--scenario", default="unspecified")
        p.add_argument("--movement-mode", default="mechanical_motion")
        p.add_argument("--pose", default="none", help="pose backend name, or none")
        p.add_argument("--classifier", default="none", help="classifier backend name, or none")

    one = sub.add_parser("extract", help="extract a single clip")
    one.add_argument("--video", required=True)
    one.add_argument("--prompt", default="")
    one.add_argument("--out", required=True)
    one.add_argument("--video-id", default=None)
    one.add_argument("--prompt-id", default="prompt-unknown")
    common(one)
    one.set_defaults(func=cmd_extract)

    many = sub.add_parser("batch", help="extract a manifest of clips into a corpus directory")
    many.add_argument("--manifest", required=True, help="CSV rows: video path, prompt_id, model_name")
    many.add_argument("--out-dir", required=True)
    many.add_argument("--prompts", default=None, help="JSONL with prompt_id and text fields")
    common(many)
    many.set_defaults(func=cmd_batch)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
