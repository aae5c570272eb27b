"""Score report files, the per-model leaderboard, and CSV table emitters.

All artifacts are byte-deterministic: JSON is dumped with sorted keys and
fixed separators, CSV floats use fixed one-decimal formatting at the
conventional x100 display scale, and rows follow sorted orders.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .bundle import CorpusIndex
from .errors import SchemaError
from .metrics import METRIC_NAMES, MotionScoreReport

SCORES_SCHEMA_VERSION = "vmbench-scores/1"


def dump_json(doc: Any, path: str | Path) -> Path:
    path = Path(path)
    text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def load_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# Score report files


def write_score_report(
    reports: Mapping[str, MotionScoreReport],
    path: str | Path,
    provenance: Mapping[str, Any] | None = None,
) -> Path:
    doc: dict[str, Any] = {
        "schema_version": SCORES_SCHEMA_VERSION,
        "provenance": dict(provenance or {}),
        "reports": {
            vid: {
                "scores": reports[vid].scores,
                "average": reports[vid].average,
                "diagnostics": reports[vid].diagnostics,
            }
            for vid in sorted(reports)
        },
    }
    return dump_json(doc, path)


def load_score_report(path: str | Path) -> dict[str, MotionScoreReport]:
    doc = load_json(path)
    if not isinstance(doc, dict) or doc.get("schema_version") != SCORES_SCHEMA_VERSION:
        raise SchemaError(f"{path}: not a score report")
    reports: dict[str, MotionScoreReport] = {}
    try:
        for vid, entry in doc["reports"].items():
            scores = {name: entry["scores"].get(name) for name in METRIC_NAMES}
            reports[vid] = MotionScoreReport(
                video_id=vid,
                scores=scores,
                average=entry.get("average"),
                diagnostics=entry.get("diagnostics", {}),
            )
    except (KeyError, TypeError, AttributeError) as exc:
        raise SchemaError(f"{path}: malformed score report: {exc!r}") from exc
    return reports


def report_score_table(reports: Mapping[str, MotionScoreReport]) -> dict[str, dict[str, float | None]]:
    """video_id -> metric name -> score, the shape alignment functions take."""
    return {vid: dict(rep.scores) for vid, rep in reports.items()}


# ---------------------------------------------------------------------------
# Leaderboard


@dataclass
class LeaderboardRow:
    model_name: str
    video_count: int
    columns: dict[str, float | None]  # unit-scale per-metric means
    average: float | None             # mean of the present columns


def row_average(columns: Mapping[str, float | None]) -> float | None:
    present = [v for v in columns.values() if v is not None]
    return sum(present) / len(present) if present else None


def leaderboard(
    reports: Mapping[str, MotionScoreReport], index: CorpusIndex
) -> list[LeaderboardRow]:
    """Per-model metric means over the scored corpus, sorted by model name.

    A metric column averages the videos where that metric is present; a
    row's average is the mean of its present columns.
    """
    by_model: dict[str, list[str]] = {}
    for vid in sorted(reports):
        entry = index.entries.get(vid)
        if entry is None:
            raise SchemaError(f"scored video {vid!r} missing from corpus index")
        by_model.setdefault(entry.model_name, []).append(vid)
    rows = []
    for model in sorted(by_model):
        vids = by_model[model]
        columns: dict[str, float | None] = {}
        for name in METRIC_NAMES:
            values = [reports[v].scores[name] for v in vids if reports[v].scores[name] is not None]
            columns[name] = sum(values) / len(values) if values else None
        rows.append(
            LeaderboardRow(
                model_name=model,
                video_count=len(vids),
                columns=columns,
                average=row_average(columns),
            )
        )
    return rows


def format_x100(value: float | None) -> str:
    """Display convention: unit scores shown x100 with one decimal."""
    return "" if value is None else f"{value * 100:.1f}"


def leaderboard_csv(rows: Sequence[LeaderboardRow]) -> str:
    header = "model,avg," + ",".join(METRIC_NAMES) + ",videos"
    lines = [header]
    for row in rows:
        cells = [row.model_name, format_x100(row.average)]
        cells += [format_x100(row.columns[name]) for name in METRIC_NAMES]
        cells.append(str(row.video_count))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def leaderboard_doc(rows: Sequence[LeaderboardRow]) -> dict[str, Any]:
    return {
        "schema_version": "vmbench-leaderboard/1",
        "rows": [
            {
                "model_name": row.model_name,
                "video_count": row.video_count,
                "columns": row.columns,
                "average": row.average,
                "display": {
                    "avg": format_x100(row.average),
                    **{name: format_x100(row.columns[name]) for name in METRIC_NAMES},
                },
            }
            for row in rows
        ],
    }


# ---------------------------------------------------------------------------
# Alignment tables


def _rho_cell(value: float | None) -> str:
    return "" if value is None else f"{value * 100:.1f}"


def spearman_csv(per_dimension: Mapping[str, float | None], aggregate: float | None) -> str:
    """One row per dimension plus the aggregate, rho shown x100.

    A dimension whose correlation was undefined (constant column) shows
    an empty cell rather than a number.
    """
    lines = ["dimension,rho_x100"]
    for name in METRIC_NAMES:
        lines.append(f"{name},{_rho_cell(per_dimension.get(name))}")
    lines.append(f"aggregate,{_rho_cell(aggregate)}")
    return "\n".join(lines) + "\n"


def ablation_csv(results: Iterable[Any]) -> str:
    """Subset membership flags plus accuracy x100, one row per subset."""
    lines = [",".join(METRIC_NAMES) + ",accuracy_x100,decided"]
    for res in results:
        flags = ["1" if name in res.subset else "0" for name in METRIC_NAMES]
        lines.append(",".join(flags) + f",{res.accuracy * 100:.1f},{res.decided}")
    return "\n".join(lines) + "\n"


def matrix_csv(matrix, dims: Sequence[str]) -> str:
    lines = ["," + ",".join(dims)]
    for i, dim in enumerate(dims):
        cells = [f"{matrix[i][j]:.4f}" for j in range(len(dims))]
        lines.append(dim + "," + ",".join(cells))
    return "\n".join(lines) + "\n"
