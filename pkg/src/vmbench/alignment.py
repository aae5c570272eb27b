"""Human-alignment statistics: annotation aggregation, rank correlation,
preference-pair accuracy, ablation sweeps, and derived quality labels.

Annotations arrive as CSV lines `video_id,dimension,annotator_id,rating,
package_id` (ratings on a 1..5 Likert scale, one dimension per package);
everything downstream works off per-(video, dimension) means.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateInput,
    DuplicateRating,
    MissingScore,
    MixedDimensionPackage,
    SchemaError,
)
from .metrics import METRIC_NAMES

# wire tokens for annotation dimensions, matching METRIC_NAMES order
DIMENSION_TOKENS = ("CAS", "MSS", "OIS", "PAS", "TCS")

# preference equality tolerance: scores equal after rounding to 9 decimals tie
TIE_DECIMALS = 9


@dataclass(frozen=True)
class AnnotationRecord:
    video_id: str
    dimension: str
    annotator_id: str
    rating: int
    package_id: str

    def __post_init__(self) -> None:
        if not (self.video_id and self.annotator_id and self.package_id):
            raise ValueError("annotation ids must be non-empty")
        if self.dimension not in DIMENSION_TOKENS:
            raise ValueError(f"unknown dimension {self.dimension!r}")
        if not isinstance(self.rating, int) or isinstance(self.rating, bool):
            raise ValueError(f"rating must be an integer, got {self.rating!r}")
        if not 1 <= self.rating <= 5:
            raise ValueError(f"rating {self.rating} outside 1..5")


def parse_annotation_lines(text: str) -> list[AnnotationRecord]:
    """Parse the CSV line format; '#' comment lines and blanks are skipped."""
    records = []
    rows = csv.reader(io.StringIO(text))
    for lineno, row in enumerate(rows, start=1):
        if not row or (row[0].lstrip().startswith("#")):
            continue
        if len(row) != 5:
            raise SchemaError(f"line {lineno}: expected 5 fields, got {len(row)}")
        video_id, dimension, annotator_id, rating, package_id = (f.strip() for f in row)
        try:
            rating_value = int(rating)
        except ValueError:
            raise SchemaError(f"line {lineno}: rating {rating!r} is not an integer") from None
        try:
            records.append(
                AnnotationRecord(
                    video_id=video_id,
                    dimension=dimension,
                    annotator_id=annotator_id,
                    rating=rating_value,
                    package_id=package_id,
                )
            )
        except ValueError as exc:
            raise SchemaError(f"line {lineno}: {exc}") from None
    return records


def format_annotation_lines(records: Iterable[AnnotationRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    for rec in records:
        writer.writerow([rec.video_id, rec.dimension, rec.annotator_id, rec.rating, rec.package_id])
    return out.getvalue()


@dataclass
class HumanScoreTable:
    """Mean rating per (video_id, dimension token) with rater counts."""

    means: dict[tuple[str, str], float] = field(default_factory=dict)
    counts: dict[tuple[str, str], int] = field(default_factory=dict)

    def videos(self) -> list[str]:
        return sorted({vid for vid, _ in self.means})

    def mean_for(self, video_id: str, dimension: str) -> float:
        try:
            return self.means[(video_id, dimension)]
        except KeyError:
            raise MissingScore(f"no human mean for ({video_id!r}, {dimension!r})") from None

    def video_aggregate(self, video_id: str) -> float:
        """Mean over the five dimension means; all five must exist."""
        values = [self.mean_for(video_id, dim) for dim in DIMENSION_TOKENS]
        return sum(values) / len(values)


def aggregate_annotations(records: Iterable[AnnotationRecord]) -> HumanScoreTable:
    """Collapse raw ratings to per-(video, dimension) means.

    Rejects a second rating from the same annotator for the same
    (video, dimension) and any package that spans two dimensions.
    """
    seen: set[tuple[str, str, str]] = set()
    package_dims: dict[str, str] = {}
    sums: dict[tuple[str, str], float] = {}
    counts: dict[tuple[str, str], int] = {}
    for rec in records:
        key = (rec.video_id, rec.dimension, rec.annotator_id)
        if key in seen:
            raise DuplicateRating(
                f"annotator {rec.annotator_id!r} rated ({rec.video_id!r}, {rec.dimension!r}) twice"
            )
        seen.add(key)
        known = package_dims.get(rec.package_id)
        if known is None:
            package_dims[rec.package_id] = rec.dimension
        elif known != rec.dimension:
            raise MixedDimensionPackage(
                f"package {rec.package_id!r} mixes dimensions {known!r} and {rec.dimension!r}"
            )
        vk = (rec.video_id, rec.dimension)
        sums[vk] = sums.get(vk, 0.0) + rec.rating
        counts[vk] = counts.get(vk, 0) + 1
    means = {vk: sums[vk] / counts[vk] for vk in sums}
    return HumanScoreTable(means=means, counts=counts)


# ---------------------------------------------------------------------------
# Rank correlation


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=float)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValueError("inputs must be 1-D and equal length")
    if xa.size < 2:
        raise DegenerateInput("need at least two observations")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise ValueError("inputs must be finite")
    rx = _average_ranks(xa)
    ry = _average_ranks(ya)
    rx -= rx.mean()
    ry -= ry.mean()
    sx = float((rx * rx).sum())
    sy = float((ry * ry).sum())
    if sx == 0.0 or sy == 0.0:
        raise DegenerateInput("constant input has no rank correlation")
    return float((rx * ry).sum() / np.sqrt(sx * sy))


# ---------------------------------------------------------------------------
# Preference pairs


@dataclass(frozen=True)
class PreferencePair:
    prompt_id: str
    video_a: str
    video_b: str
    human_winner: str  # 'a' | 'b' | 'tie'
    metric_winner: str


@dataclass
class PairwiseResult:
    accuracy: float
    decided: int
    matched: int
    excluded_ties: int
    subset: tuple[str, ...]
    pairs: list[PreferencePair] = field(default_factory=list)


def _winner(a: float, b: float) -> str:
    if round(a, TIE_DECIMALS) == round(b, TIE_DECIMALS):
        return "tie"
    return "a" if a > b else "b"


def metric_aggregate(
    scores: Mapping[str, float | None], video_id: str, subset: tuple[str, ...]
) -> float:
    total = 0.0
    for name in subset:
        value = scores.get(name)
        if value is None:
            raise MissingScore(f"video {video_id!r} lacks metric score {name!r}")
        total += value
    return total / len(subset)


def _check_subset(subset: Sequence[str] | None) -> tuple[str, ...]:
    if subset is None:
        return METRIC_NAMES
    chosen = tuple(subset)
    if not chosen:
        raise ValueError("metric subset must be non-empty")
    unknown = [name for name in chosen if name not in METRIC_NAMES]
    if unknown:
        raise ValueError(f"unknown metric names {unknown}")
    if len(set(chosen)) != len(chosen):
        raise ValueError("metric subset has duplicates")
    return chosen


def pairwise_accuracy(
    human: HumanScoreTable,
    metric_scores: Mapping[str, Mapping[str, float | None]],
    grouping: Mapping[str, Sequence[str]],
    subset: Sequence[str] | None = None,
    keep_pairs: bool = False,
) -> PairwiseResult:
    """Fraction of same-prompt video pairs where the metric aggregate picks
    the same winner as the human aggregate.

    Pairs whose human aggregates tie (equal after rounding) leave the
    denominator; a metric-side tie against a decided human pair counts as
    a miss. Raises MissingScore for grouped videos lacking any needed score.
    """
    chosen = _check_subset(subset)
    decided = 0
    matched = 0
    excluded = 0
    pairs: list[PreferencePair] = []
    for prompt_id in sorted(grouping):
        videos = sorted(grouping[prompt_id])
        human_agg = {v: human.video_aggregate(v) for v in videos}
        metric_agg = {}
        for v in videos:
            if v not in metric_scores:
                raise MissingScore(f"video {v!r} has no metric scores")
            metric_agg[v] = metric_aggregate(metric_scores[v], v, chosen)
        for i in range(len(videos)):
            for j in range(i + 1, len(videos)):
                a, b = videos[i], videos[j]
                hw = _winner(human_agg[a], human_agg[b])
                mw = _winner(metric_agg[a], metric_agg[b])
                if keep_pairs:
                    pairs.append(
                        PreferencePair(
                            prompt_id=prompt_id,
                            video_a=a,
                            video_b=b,
                            human_winner=hw,
                            metric_winner=mw,
                        )
                    )
                if hw == "tie":
                    excluded += 1
                    continue
                decided += 1
                if hw == mw:
                    matched += 1
    if decided == 0:
        raise DegenerateInput("no human-decided pairs to score")
    return PairwiseResult(
        accuracy=matched / decided,
        decided=decided,
        matched=matched,
        excluded_ties=excluded,
        subset=chosen,
        pairs=pairs,
    )


def default_ablation_subsets() -> list[tuple[str, ...]]:
    """Full set, the five leave-one-out subsets, and the build-up prefixes."""
    subsets: list[tuple[str, ...]] = [METRIC_NAMES]
    for name in METRIC_NAMES:
        subsets.append(tuple(m for m in METRIC_NAMES if m != name))
    for k in range(1, len(METRIC_NAMES) - 1):
        subsets.append(METRIC_NAMES[:k])
    return subsets


def ablation_sweep(
    human: HumanScoreTable,
    metric_scores: Mapping[str, Mapping[str, float | None]],
    grouping: Mapping[str, Sequence[str]],
    subsets: Sequence[Sequence[str]] | None = None,
) -> list[PairwiseResult]:
    """Pairwise accuracy for each metric subset, in the order given."""
    chosen = [_check_subset(s) for s in (subsets if subsets is not None else default_ablation_subsets())]
    return [pairwise_accuracy(human, metric_scores, grouping, subset=s) for s in chosen]


# ---------------------------------------------------------------------------
# Correlation structure


def correlation_matrix(
    metric_scores: Mapping[str, Mapping[str, float | None]],
    dims: Sequence[str] = METRIC_NAMES,
) -> np.ndarray:
    """Spearman correlation between per-video score dimensions.

    Uses videos carrying all requested dimensions; raises DegenerateInput
    when fewer than two such videos exist or a dimension is constant.
    """
    rows = []
    for vid in sorted(metric_scores):
        scores = metric_scores[vid]
        values = [scores.get(d) for d in dims]
        if any(v is None for v in values):
            continue
        rows.append([float(v) for v in values])
    if len(rows) < 2:
        raise DegenerateInput("need at least two fully scored videos")
    data = np.asarray(rows, dtype=float)
    n = len(dims)
    out = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            try:
                rho = spearman_rho(data[:, i], data[:, j])
            except DegenerateInput:
                raise DegenerateInput(f"dimension {dims[i]!r} or {dims[j]!r} is constant") from None
            out[i, j] = out[j, i] = rho
    return out


def human_table_as_scores(table: HumanScoreTable) -> dict[str, dict[str, float]]:
    """Reshape a HumanScoreTable for correlation_matrix (lower-case keys)."""
    out: dict[str, dict[str, float]] = {}
    for (vid, dim), mean in table.means.items():
        out.setdefault(vid, {})[dim.lower()] = mean
    return out


# ---------------------------------------------------------------------------
# Derived five-level quality labels


def derive_commonsense_labels(
    outcomes: Iterable[tuple[str, str, str]],
) -> dict[str, int]:
    """Five-level labels (1 worst .. 5 best) from pairwise outcomes.

    Win rate = wins / comparisons (a tie is a comparison without a win);
    videos sort ascending by (win rate, video_id) and split into five
    contiguous groups whose sizes differ by at most one, larger groups at
    the low end.
    """
    wins: dict[str, float] = {}
    comps: dict[str, int] = {}
    for a, b, winner in outcomes:
        if winner not in ("a", "b", "tie"):
            raise ValueError(f"winner must be 'a', 'b' or 'tie', got {winner!r}")
        if a == b:
            raise ValueError(f"pair compares {a!r} with itself")
        for v in (a, b):
            wins.setdefault(v, 0.0)
            comps[v] = comps.get(v, 0) + 1
        if winner == "a":
            wins[a] += 1.0
        elif winner == "b":
            wins[b] += 1.0
    if not comps:
        raise DegenerateInput("no pair outcomes given")
    ranked = sorted(comps, key=lambda v: (wins[v] / comps[v], v))
    labels: dict[str, int] = {}
    for level, chunk in enumerate(np.array_split(np.asarray(ranked, dtype=object), 5), start=1):
        for vid in chunk:
            labels[str(vid)] = level
    return labels


# ---------------------------------------------------------------------------
# Headline improvement


@dataclass(frozen=True)
class ImprovementReport:
    ours: float
    best_baseline_name: str
    best_baseline_value: float
    delta: float


def improvement_report(
    ours: float, baselines: Sequence[tuple[str, float]]
) -> ImprovementReport:
    """Margin between our aggregate alignment score and the best baseline."""
    if not baselines:
        raise DegenerateInput("no baselines to compare against")
    best_name, best_value = min(baselines, key=lambda item: (-item[1], item[0]))
    return ImprovementReport(
        ours=ours,
        best_baseline_name=best_name,
        best_baseline_value=best_value,
        delta=ours - best_value,
    )
