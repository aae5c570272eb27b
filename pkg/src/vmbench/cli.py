"""Command-line workbench.

Exit codes: 0 success, 1 corpus-level failure (nothing scorable, broken
join, undefined statistic), 2 configuration error (bad flags or paths;
argparse itself also exits 2). VMBENCH_OUT supplies the default output
directory when --out is omitted; nothing else reads the environment.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Sequence

from . import alignment, calibration, metrics, prompts, reports
from .bundle import load_bundle, load_corpus_index
from .errors import (
    DegenerateInput,
    JoinError,
    MissingScore,
    SchemaError,
    VMBenchError,
)

OUT_ENV_VAR = "VMBENCH_OUT"


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _resolve_out(arg_out: str | None, default_name: str) -> Path | None:
    """--out wins; else VMBENCH_OUT/<default_name>; else None (config error)."""
    if arg_out:
        return Path(arg_out)
    base = os.environ.get(OUT_ENV_VAR)
    if base:
        return Path(base) / default_name
    return None


def _load_corpus(bundles_dir: str):
    """(index, {video_id: bundle}, {video_id: failure message})."""
    corpus = Path(bundles_dir)
    index = load_corpus_index(corpus)
    bundles = {}
    failures = {}
    for vid in index.video_ids():
        entry = index.entries[vid]
        try:
            bundle = load_bundle(corpus / entry.path)
        except (SchemaError, ValueError, OSError) as exc:
            failures[vid] = f"{type(exc).__name__}: {exc}"
            continue
        if bundle.video_id != vid:
            failures[vid] = f"bundle declares video_id {bundle.video_id!r}, index says {vid!r}"
            continue
        bundles[vid] = bundle
    return index, bundles, failures


def _check_dir(path: str, what: str) -> Path | None:
    p = Path(path)
    if not p.is_dir():
        _err(f"{what} directory not found: {path}")
        return None
    return p


def _check_file(path: str, what: str) -> Path | None:
    p = Path(path)
    if not p.is_file():
        _err(f"{what} file not found: {path}")
        return None
    return p


# ---------------------------------------------------------------------------
# calibrate


def cmd_calibrate(args: argparse.Namespace) -> int:
    if _check_dir(args.bundles, "bundle") is None:
        return 2
    out = _resolve_out(args.out, "thresholds.json")
    if out is None:
        _err(f"--out required (or set {OUT_ENV_VAR})")
        return 2
    overrides = None
    if args.overrides:
        if _check_file(args.overrides, "overrides") is None:
            return 2
        overrides = reports.load_json(args.overrides)
    try:
        index, bundles, failures = _load_corpus(args.bundles)
    except SchemaError as exc:
        _err(str(exc))
        return 1
    if not bundles:
        _err("no readable bundles in corpus")
        return 1
    try:
        thresholds = calibration.calibrate(
            (bundles[vid] for vid in sorted(bundles)),
            q=args.quantile,
            overrides=overrides,
            min_samples=args.min_samples,
            floor=args.floor,
            corpus_id=Path(args.bundles).name,
        )
    except (ValueError, SchemaError) as exc:
        _err(str(exc))
        return 2
    if failures:
        thresholds.provenance["skipped"] = dict(sorted(failures.items()))
    if args.dry_run:
        print(f"dry run: calibrated from {len(bundles)} bundles, nothing written")
        return 0
    calibration.save_thresholds(thresholds, out)
    print(f"calibrated thresholds from {len(bundles)} bundles -> {out}")
    return 0


# ---------------------------------------------------------------------------
# score


def cmd_score(args: argparse.Namespace) -> int:
    if _check_dir(args.bundles, "bundle") is None:
        return 2
    out = _resolve_out(args.out, "scores.json")
    if out is None:
        _err(f"--out required (or set {OUT_ENV_VAR})")
        return 2
    if args.thresholds:
        if _check_file(args.thresholds, "thresholds") is None:
            return 2
        try:
            thresholds = calibration.load_thresholds(args.thresholds)
        except SchemaError as exc:
            _err(str(exc))
            return 2
    else:
        thresholds = calibration.ThresholdSet.defaults()
    try:
        index, bundles, failures = _load_corpus(args.bundles)
    except SchemaError as exc:
        _err(str(exc))
        return 1
    if not bundles:
        _err("no scorable bundles in corpus")
        return 1
    scored = metrics.score_corpus((bundles[vid] for vid in sorted(bundles)), thresholds)
    provenance = {
        "corpus_id": Path(args.bundles).name,
        "thresholds": thresholds.provenance,
        "failures": dict(sorted(failures.items())),
    }
    if args.dry_run:
        print(f"dry run: scored {len(scored)} videos ({len(failures)} failed), nothing written")
        return 0
    reports.write_score_report(scored, out, provenance=provenance)
    print(f"scored {len(scored)} videos ({len(failures)} failed) -> {out}")
    return 0


# ---------------------------------------------------------------------------
# validate / ablate helpers


def _load_annotation_records(path: Path) -> list[alignment.AnnotationRecord]:
    files = [path] if path.is_file() else sorted(path.glob("*.csv"))
    if not files:
        raise SchemaError(f"no annotation files at {path}")
    records: list[alignment.AnnotationRecord] = []
    for f in files:
        records.extend(alignment.parse_annotation_lines(f.read_text(encoding="utf-8")))
    return records


def _join_inputs(args: argparse.Namespace):
    """Shared validate/ablate loading: reports, human table, grouping."""
    scored = reports.load_score_report(args.scores)
    index = load_corpus_index(args.bundles)
    records = _load_annotation_records(Path(args.annotations))
    human = alignment.aggregate_annotations(records)
    annotated = human.videos()
    missing = [vid for vid in annotated if vid not in scored]
    if missing:
        raise JoinError(f"annotated videos missing from score report: {missing}")
    unindexed = [vid for vid in annotated if vid not in index.entries]
    if unindexed:
        raise JoinError(f"annotated videos missing from corpus index: {unindexed}")
    grouping = {
        prompt: [vid for vid in vids if vid in set(annotated)]
        for prompt, vids in index.by_prompt().items()
    }
    grouping = {p: vs for p, vs in grouping.items() if len(vs) >= 2}
    return scored, index, human, grouping


def _subset_arg(raw: str | None) -> tuple[str, ...] | None:
    if raw is None:
        return None
    return tuple(name.strip().lower() for name in raw.split(",") if name.strip())


def cmd_validate(args: argparse.Namespace) -> int:
    for check, what in ((args.scores, "score report"), (args.annotations, "annotations")):
        if not Path(check).exists():
            _err(f"{what} not found: {check}")
            return 2
    if _check_dir(args.bundles, "bundle") is None:
        return 2
    out_dir = _resolve_out(args.out, "validation")
    if out_dir is None:
        _err(f"--out required (or set {OUT_ENV_VAR})")
        return 2
    subset = _subset_arg(args.subset)
    try:
        scored, index, human, grouping = _join_inputs(args)
        table = reports.report_score_table(scored)
        annotated = human.videos()

        per_dim: dict[str, float | None] = {}
        for name, token in zip(metrics.METRIC_NAMES, alignment.DIMENSION_TOKENS):
            xs, ys = [], []
            for vid in annotated:
                score = table[vid].get(name)
                mean = human.means.get((vid, token))
                if score is not None and mean is not None:
                    xs.append(score)
                    ys.append(mean)
            try:
                per_dim[name] = alignment.spearman_rho(xs, ys) if len(xs) >= 2 else None
            except DegenerateInput:
                per_dim[name] = None

        agg_subset = subset if subset is not None else metrics.METRIC_NAMES
        xs, ys = [], []
        for vid in annotated:
            xs.append(alignment.metric_aggregate(table[vid], vid, tuple(agg_subset)))
            ys.append(human.video_aggregate(vid))
        try:
            aggregate_rho = alignment.spearman_rho(xs, ys) if len(xs) >= 2 else None
        except DegenerateInput:
            aggregate_rho = None

        pairwise_doc = None
        if grouping:
            try:
                pw = alignment.pairwise_accuracy(human, table, grouping, subset=subset)
                pairwise_doc = {
                    "accuracy": pw.accuracy,
                    "decided": pw.decided,
                    "matched": pw.matched,
                    "excluded_ties": pw.excluded_ties,
                    "subset": list(pw.subset),
                }
            except DegenerateInput:
                pairwise_doc = None

        def safe_matrix(scores_map):
            try:
                return alignment.correlation_matrix(scores_map).tolist()
            except DegenerateInput:
                return None

        metric_matrix = safe_matrix(table)
        human_matrix = safe_matrix(alignment.human_table_as_scores(human))
    except (VMBenchError, ValueError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return 1

    doc = {
        "schema_version": "vmbench-validation/1",
        "counts": {
            "scored_videos": len(scored),
            "annotated_videos": len(annotated),
            "prompt_groups": len(grouping),
        },
        "spearman": {**per_dim, "aggregate": aggregate_rho},
        "pairwise": pairwise_doc,
        "correlation": {
            "dims": list(metrics.METRIC_NAMES),
            "metric": metric_matrix,
            "human": human_matrix,
        },
    }
    if args.dry_run:
        print(f"dry run: validated {len(annotated)} annotated videos, nothing written")
        return 0
    out_dir.mkdir(parents=True, exist_ok=True)
    reports.dump_json(doc, out_dir / "validation.json")
    (out_dir / "spearman.csv").write_text(
        reports.spearman_csv(per_dim, aggregate_rho), encoding="utf-8"
    )
    if metric_matrix is not None:
        (out_dir / "correlation_metric.csv").write_text(
            reports.matrix_csv(metric_matrix, metrics.METRIC_NAMES), encoding="utf-8"
        )
    if human_matrix is not None:
        (out_dir / "correlation_human.csv").write_text(
            reports.matrix_csv(human_matrix, metrics.METRIC_NAMES), encoding="utf-8"
        )
    print(f"validated {len(annotated)} annotated videos -> {out_dir}")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    for check, what in ((args.scores, "score report"), (args.annotations, "annotations")):
        if not Path(check).exists():
            _err(f"{what} not found: {check}")
            return 2
    if _check_dir(args.bundles, "bundle") is None:
        return 2
    out_dir = _resolve_out(args.out, "ablation")
    if out_dir is None:
        _err(f"--out required (or set {OUT_ENV_VAR})")
        return 2
    try:
        scored, index, human, grouping = _join_inputs(args)
        if not grouping:
            raise DegenerateInput("no prompt group has two annotated videos")
        table = reports.report_score_table(scored)
        results = alignment.ablation_sweep(human, table, grouping)
    except (VMBenchError, ValueError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return 1
    doc = {
        "schema_version": "vmbench-ablation/1",
        "rows": [
            {
                "subset": list(res.subset),
                "accuracy": res.accuracy,
                "decided": res.decided,
                "matched": res.matched,
                "excluded_ties": res.excluded_ties,
            }
            for res in results
        ],
    }
    if args.dry_run:
        print(f"dry run: swept {len(results)} subsets, nothing written")
        return 0
    out_dir.mkdir(parents=True, exist_ok=True)
    reports.dump_json(doc, out_dir / "ablation.json")
    (out_dir / "ablation.csv").write_text(reports.ablation_csv(results), encoding="utf-8")
    print(f"swept {len(results)} metric subsets -> {out_dir}")
    return 0


def cmd_leaderboard(args: argparse.Namespace) -> int:
    if _check_file(args.scores, "score report") is None:
        return 2
    if _check_dir(args.bundles, "bundle") is None:
        return 2
    out_dir = _resolve_out(args.out, "leaderboard")
    if out_dir is None:
        _err(f"--out required (or set {OUT_ENV_VAR})")
        return 2
    try:
        scored = reports.load_score_report(args.scores)
        index = load_corpus_index(args.bundles)
        rows = reports.leaderboard(scored, index)
    except (VMBenchError, ValueError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return 1
    if args.dry_run:
        print(f"dry run: ranked {len(rows)} models, nothing written")
        return 0
    out_dir.mkdir(parents=True, exist_ok=True)
    reports.dump_json(reports.leaderboard_doc(rows), out_dir / "leaderboard.json")
    (out_dir / "leaderboard.csv").write_text(reports.leaderboard_csv(rows), encoding="utf-8")
    print(f"ranked {len(rows)} models -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# prompts


def cmd_prompts_sample(args: argparse.Namespace) -> int:
    if _check_file(args.library, "metadata library") is None:
        return 2
    out = _resolve_out(args.out, "sampled_prompts.jsonl")
    if out is None:
        _err(f"--out required (or set {OUT_ENV_VAR})")
        return 2
    try:
        library = prompts.load_metadata_library(args.library)
        sets = prompts.sample_metadata_sets(library, args.count, args.seed)
    except (VMBenchError, ValueError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return 1 if isinstance(exc, VMBenchError) else 2
    records = [
        prompts.PromptRecord(
            prompt_id=f"mmpg-{i:05d}", subject=s.subject, place=s.place, action=s.action
        )
        for i, s in enumerate(sets)
    ]
    if args.dry_run:
        print(f"dry run: sampled {len(records)} metadata sets (seed {args.seed}), nothing written")
        return 0
    prompts.save_prompt_records(records, out)
    print(f"sampled {len(records)} metadata sets (seed {args.seed}) -> {out}")
    return 0


def cmd_prompts_run(args: argparse.Namespace) -> int:
    if _check_file(args.records, "prompt records") is None:
        return 2
    out = _resolve_out(args.out, "prompt_records.jsonl")
    if out is None:
        _err(f"--out required (or set {OUT_ENV_VAR})")
        return 2
    try:
        sampled = prompts.load_prompt_records(args.records)
        sets = [
            prompts.MetadataSet(subject=r.subject, place=r.place, action=r.action)
            for r in sampled
        ]
        generator = prompts.TemplateGenerator(target_words=args.target_words)
        judge = prompts.ConstantJudge(score=args.judge_score)
        records = prompts.run_pipeline(
            sets, generator, judge, accept_threshold=args.accept_threshold
        )
    except (VMBenchError, ValueError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return 1
    accepted = sum(1 for r in records if r.state == "accepted")
    if args.dry_run:
        print(f"dry run: {accepted}/{len(records)} candidates accepted, nothing written")
        return 0
    prompts.save_prompt_records(records, out)
    print(f"pipeline accepted {accepted}/{len(records)} candidates -> {out}")
    return 0


def cmd_prompts_stats(args: argparse.Namespace) -> int:
    if _check_file(args.records, "prompt records") is None:
        return 2
    out = _resolve_out(args.out, "prompt_stats.json")
    if out is None:
        _err(f"--out required (or set {OUT_ENV_VAR})")
        return 2
    try:
        records = prompts.load_prompt_records(args.records)
        stats = prompts.suite_statistics(records)
    except (VMBenchError, ValueError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return 1
    if args.dry_run:
        print(f"dry run: statistics over {stats['total']} records, nothing written")
        return 0
    reports.dump_json(stats, out)
    print(f"statistics over {stats['total']} records -> {out}")
    return 0


def cmd_prompts_import(args: argparse.Namespace) -> int:
    if _check_file(args.suite, "prompt suite") is None:
        return 2
    out = _resolve_out(args.out, "imported_prompts.jsonl")
    if out is None:
        _err(f"--out required (or set {OUT_ENV_VAR})")
        return 2
    try:
        records = prompts.import_prompt_suite(args.suite)
    except (VMBenchError, ValueError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return 1
    if args.dry_run:
        print(f"dry run: imported {len(records)} prompts, nothing written")
        return 0
    prompts.save_prompt_records(records, out)
    print(f"imported {len(records)} prompts -> {out}")
    return 0


# ---------------------------------------------------------------------------
# annotations


def cmd_annotations_import(args: argparse.Namespace) -> int:
    if not Path(args.annotations).exists():
        _err(f"annotations not found: {args.annotations}")
        return 2
    out = _resolve_out(args.out, "human_scores.json")
    if out is None:
        _err(f"--out required (or set {OUT_ENV_VAR})")
        return 2
    try:
        records = _load_annotation_records(Path(args.annotations))
        table = alignment.aggregate_annotations(records)
    except (VMBenchError, ValueError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return 1
    doc = {
        "schema_version": "vmbench-human/1",
        "videos": {
            vid: {
                dim: {
                    "mean": table.means[(vid, dim)],
                    "raters": table.counts[(vid, dim)],
                }
                for dim in alignment.DIMENSION_TOKENS
                if (vid, dim) in table.means
            }
            for vid in table.videos()
        },
    }
    if args.dry_run:
        print(
            f"dry run: aggregated {len(records)} ratings over "
            f"{len(table.videos())} videos, nothing written"
        )
        return 0
    reports.dump_json(doc, out)
    print(f"aggregated {len(records)} ratings over {len(table.videos())} videos -> {out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vmbench", description="Motion-quality scoring workbench for generated video."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="derive thresholds from a reference corpus")
    p.add_argument("--bundles", required=True, help="reference corpus directory (with index.json)")
    p.add_argument("--out", help="output thresholds file")
    p.add_argument("--quantile", type=float, default=calibration.DEFAULT_QUANTILE)
    p.add_argument("--min-samples", type=int, default=calibration.DEFAULT_MIN_SAMPLES)
    p.add_argument("--floor", type=float, default=calibration.DEFAULT_FLOOR)
    p.add_argument("--overrides", help="partial threshold JSON merged last")
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("score", help="score a bundle corpus on the five metrics")
    p.add_argument("--bundles", required=True)
    p.add_argument("--thresholds", help="threshold file (defaults used when omitted)")
    p.add_argument("--out", help="output score report JSON")
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("validate", help="human-alignment statistics for a scored corpus")
    p.add_argument("--scores", required=True, help="score report JSON")
    p.add_argument("--bundles", required=True, help="corpus directory (for the index)")
    p.add_argument("--annotations", required=True, help="annotation CSV file or directory")
    p.add_argument("--out", help="output directory")
    p.add_argument("--subset", help="comma-separated metric names for the aggregate")
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("ablate", help="pairwise accuracy across metric subsets")
    p.add_argument("--scores", required=True)
    p.add_argument("--bundles", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", help="output directory")
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("leaderboard", help="per-model score table")
    p.add_argument("--scores", required=True)
    p.add_argument("--bundles", required=True)
    p.add_argument("--out", help="output directory")
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_leaderboard)

    p = sub.add_parser("prompts", help="prompt-suite pipeline")
    psub = p.add_subparsers(dest="prompts_command", required=True)

    q = psub.add_parser("sample", help="sample metadata sets from a library")
    q.add_argument("--library", required=True)
    q.add_argument("--count", type=int, required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out")
    q.add_argument("--dry-run", action="store_true")
    q.set_defaults(func=cmd_prompts_sample)

    q = psub.add_parser("run", help="run sampled sets through the staged pipeline")
    q.add_argument("--records", required=True, help="sampled prompt records (JSONL)")
    q.add_argument("--out")
    q.add_argument("--accept-threshold", type=float, default=prompts.DEFAULT_ACCEPT_THRESHOLD)
    q.add_argument("--target-words", type=int, default=18, help="stub generator word count")
    q.add_argument("--judge-score", type=float, default=0.9, help="stub judge plausibility")
    q.add_argument("--dry-run", action="store_true")
    q.set_defaults(func=cmd_prompts_run)

    q = psub.add_parser("stats", help="coverage statistics over prompt records")
    q.add_argument("--records", required=True)
    q.add_argument("--out")
    q.add_argument("--dry-run", action="store_true")
    q.set_defaults(func=cmd_prompts_stats)

    q = psub.add_parser("import", help="import a released prompt suite (JSONL)")
    q.add_argument("--suite", required=True)
    q.add_argument("--out")
    q.add_argument("--dry-run", action="store_true")
    q.set_defaults(func=cmd_prompts_import)

    p = sub.add_parser("annotations", help="annotation utilities")
    asub = p.add_subparsers(dest="annotations_command", required=True)

    q = asub.add_parser("import", help="aggregate annotation CSVs to per-video means")
    q.add_argument("--annotations", required=True, help="CSV file or directory")
    q.add_argument("--out")
    q.add_argument("--dry-run", action="store_true")
    q.set_defaults(func=cmd_annotations_import)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
