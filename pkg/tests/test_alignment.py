"""Human-alignment statistics: annotation ingestion, rank correlation,
pairwise preference accuracy, ablation subsets, and label derivation."""
from __future__ import annotations

import math

import numpy as np
import pytest

import oracles
from vmbench.alignment import (
    AnnotationRecord,
    HumanScoreTable,
    aggregate_annotations,
    ablation_sweep,
    correlation_matrix,
    default_ablation_subsets,
    derive_commonsense_labels,
    format_annotation_lines,
    human_table_as_scores,
    improvement_report,
    metric_aggregate,
    pairwise_accuracy,
    parse_annotation_lines,
    spearman_rho,
)
from vmbench.errors import (
    DegenerateInput,
    DuplicateRating,
    MissingScore,
    MixedDimensionPackage,
    SchemaError,
)

DIMS = ("CAS", "MSS", "OIS", "PAS", "TCS")

# ---------------------------------------------------------------------------
# Annotation lines


def test_parse_annotation_lines_skips_comments_and_blanks() -> None:
    text = "\n".join(
        [
            "# exported 2026-02-11, completion 1.00",
            "",
            "vid-001,CAS,rater-a,4,pkg-1",
            "vid-001,MSS,rater-a,5,pkg-2",
            "  # trailing note",
        ]
    )
    records = parse_annotation_lines(text)
    assert len(records) == 2
    assert records[0] == AnnotationRecord(
        video_id="vid-001", dimension="CAS", annotator_id="rater-a", rating=4, package_id="pkg-1"
    )


def test_annotation_lines_round_trip() -> None:
    records = [
        AnnotationRecord("v-2", "TCS", "r-1", 1, "p-9"),
        AnnotationRecord("v-1", "PAS", "r-2", 5, "p-9"),
    ]
    assert parse_annotation_lines(format_annotation_lines(records)) == records


def test_parse_annotation_lines_rejections() -> None:
    with pytest.raises(SchemaError):
        parse_annotation_lines("vid,CAS,r,4\n")  # five fields required
    with pytest.raises(SchemaError):
        parse_annotation_lines("vid,GLOW,r,4,p\n")  # unknown dimension
    with pytest.raises(SchemaError):
        parse_annotation_lines("vid,CAS,r,six,p\n")
    with pytest.raises(SchemaError):
        parse_annotation_lines("vid,CAS,r,9,p\n")  # rating outside 1..5
    with pytest.raises(ValueError):
        AnnotationRecord("v", "CAS", "r", 0, "p")
    with pytest.raises(ValueError):
        AnnotationRecord("v", "CAS", "r", 6, "p")


def test_aggregate_annotations_means() -> None:
    records = [
        AnnotationRecord("v", "CAS", "r1", 2, "p"),
        AnnotationRecord("v", "CAS", "r2", 3, "p"),
        AnnotationRecord("v", "CAS", "r3", 5, "p"),
        AnnotationRecord("v", "MSS", "r1", 4, "p2"),
    ]
    table = aggregate_annotations(records)
    assert table.mean_for("v", "CAS") == pytest.approx(10.0 / 3.0)
    assert table.counts[("v", "CAS")] == 3
    assert table.mean_for("v", "MSS") == 4.0
    with pytest.raises(MissingScore):
        table.mean_for("v", "OIS")


def test_aggregate_annotations_rejects_duplicates_and_mixed_packages() -> None:
    dup = [
        AnnotationRecord("v", "CAS", "r1", 2, "p"),
        AnnotationRecord("v", "CAS", "r1", 4, "p"),
    ]
    with pytest.raises(DuplicateRating):
        aggregate_annotations(dup)
    mixed = [
        AnnotationRecord("v", "CAS", "r1", 2, "p"),
        AnnotationRecord("w", "MSS", "r1", 4, "p"),
    ]
    with pytest.raises(MixedDimensionPackage):
        aggregate_annotations(mixed)


def test_video_aggregate_averages_dimensions() -> None:
    records = [
        AnnotationRecord("v", dim, "r1", i + 1, f"p-{dim}") for i, dim in enumerate(DIMS)
    ]
    table = aggregate_annotations(records)
    assert table.video_aggregate("v") == pytest.approx(3.0)
    with pytest.raises(MissingScore):
        aggregate_annotations(records[:4]).video_aggregate("v")


# ---------------------------------------------------------------------------
# Spearman


def test_spearman_worked_example() -> None:
    rho = spearman_rho([1, 2, 3, 4, 5], [1, 3, 2, 5, 4])
    assert rho == pytest.approx(0.8, abs=1e-15)


def test_spearman_perfect_and_reversed() -> None:
    x = [0.1, 0.5, 0.9, 1.3]
    assert spearman_rho(x, [2 * v + 1 for v in x]) == pytest.approx(1.0)
    assert spearman_rho(x, [-v for v in x]) == pytest.approx(-1.0)


def test_spearman_matches_closed_form_without_ties() -> None:
    rng = np.random.default_rng(41)
    for _ in range(200):
        n = int(rng.integers(3, 30))
        x = rng.permutation(n).astype(float)
        y = rng.permutation(n).astype(float)
        assert spearman_rho(x, y) == pytest.approx(
            oracles.spearman_closed_form(x, y), abs=1e-12
        )


def test_spearman_matches_naive_with_ties() -> None:
    rng = np.random.default_rng(43)
    for _ in range(200):
        n = int(rng.integers(3, 25))
        x = rng.integers(0, 5, size=n).astype(float)
        y = rng.integers(0, 5, size=n).astype(float)
        try:
            expected = oracles.naive_spearman(list(x), list(y))
        except ZeroDivisionError:
            with pytest.raises(DegenerateInput):
                spearman_rho(x, y)
            continue
        assert spearman_rho(x, y) == pytest.approx(expected, abs=1e-12)


def test_spearman_invariant_under_monotone_maps() -> None:
    rng = np.random.default_rng(47)
    for _ in range(100):
        n = int(rng.integers(4, 20))
        x = rng.normal(size=n)
        y = rng.normal(size=n)
        base = spearman_rho(x, y)
        warped = spearman_rho(np.exp(x), [math.atan(v) for v in y])
        assert warped == pytest.approx(base, abs=1e-12)


def test_spearman_degenerate_inputs() -> None:
    with pytest.raises(DegenerateInput):
        spearman_rho([1.0], [2.0])
    with pytest.raises(DegenerateInput):
        spearman_rho([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        spearman_rho([1.0, 2.0], [1.0])


# ---------------------------------------------------------------------------
# Pairwise preference accuracy


def human_table(values: dict) -> HumanScoreTable:
    """values: video_id -> mean rating applied to all five dimensions."""
    means = {}
    counts = {}
    for vid, value in values.items():
        for dim in DIMS:
            means[(vid, dim)] = value
            counts[(vid, dim)] = 1
    return HumanScoreTable(means=means, counts=counts)


def metric_scores(values: dict) -> dict:
    return {
        vid: {"cas": v, "mss": v, "ois": v, "pas": v, "tcs": v} for vid, v in values.items()
    }


def test_pairwise_accuracy_perfect_agreement() -> None:
    human = human_table({"a": 1.0, "b": 3.0, "c": 5.0})
    scores = metric_scores({"a": 0.1, "b": 0.5, "c": 0.9})
    result = pairwise_accuracy(human, scores, grouping={"p": ["a", "b", "c"]})
    assert result.accuracy == 1.0
    assert result.decided == 3


def test_pairwise_accuracy_counts_misses_and_metric_ties() -> None:
    human = human_table({"a": 1.0, "b": 5.0})
    agree = pairwise_accuracy(human, metric_scores({"a": 0.2, "b": 0.9}), {"p": ["a", "b"]})
    assert agree.accuracy == 1.0
    disagree = pairwise_accuracy(human, metric_scores({"a": 0.9, "b": 0.2}), {"p": ["a", "b"]})
    assert disagree.accuracy == 0.0
    tied = pairwise_accuracy(human, metric_scores({"a": 0.4, "b": 0.4}), {"p": ["a", "b"]})
    assert tied.accuracy == 0.0  # metric must commit when humans did


def test_pairwise_accuracy_excludes_human_ties() -> None:
    human = human_table({"a": 3.0, "b": 3.0, "c": 5.0})
    scores = metric_scores({"a": 0.1, "b": 0.9, "c": 0.95})
    result = pairwise_accuracy(human, scores, {"p": ["a", "b", "c"]})
    # (a,b) is a human tie and drops out; (a,c) and (b,c) remain
    assert result.decided == 2
    assert result.excluded_ties == 1
    assert result.accuracy == 1.0


def test_pairwise_accuracy_near_tie_rounding() -> None:
    # differences below the rounding decimals count as ties
    human = human_table({"a": 3.0, "b": 3.0 + 1e-12})
    scores = metric_scores({"a": 0.1, "b": 0.9})
    with pytest.raises(DegenerateInput):
        pairwise_accuracy(human, scores, {"p": ["a", "b"]})


def test_pairwise_accuracy_respects_grouping() -> None:
    human = human_table({"a": 1.0, "b": 5.0, "c": 2.0, "d": 4.0})
    scores = metric_scores({"a": 0.1, "b": 0.9, "c": 0.2, "d": 0.8})
    split = pairwise_accuracy(human, scores, {"p1": ["a", "b"], "p2": ["c", "d"]})
    assert split.decided == 2  # no cross-prompt pairs
    merged = pairwise_accuracy(human, scores, {"p": ["a", "b", "c", "d"]})
    assert merged.decided == 6


def test_pairwise_accuracy_subset_restricts_columns() -> None:
    human = human_table({"a": 1.0, "b": 5.0})
    scores = {
        "a": {"cas": 0.9, "mss": 0.1, "ois": 0.1, "pas": 0.1, "tcs": 0.1},
        "b": {"cas": 0.1, "mss": 0.9, "ois": 0.9, "pas": 0.9, "tcs": 0.9},
    }
    full = pairwise_accuracy(human, scores, {"p": ["a", "b"]})
    assert full.accuracy == 1.0  # mean 0.26 vs 0.74 follows the humans
    cas_only = pairwise_accuracy(human, scores, {"p": ["a", "b"]}, subset=("cas",))
    assert cas_only.accuracy == 0.0


def test_pairwise_accuracy_rejects_bad_subsets() -> None:
    human = human_table({"a": 1.0, "b": 5.0})
    scores = metric_scores({"a": 0.1, "b": 0.9})
    with pytest.raises(ValueError):
        pairwise_accuracy(human, scores, {"p": ["a", "b"]}, subset=())
    with pytest.raises(ValueError):
        pairwise_accuracy(human, scores, {"p": ["a", "b"]}, subset=("cas", "cas"))
    with pytest.raises(ValueError):
        pairwise_accuracy(human, scores, {"p": ["a", "b"]}, subset=("glow",))


def test_metric_aggregate_and_missing_scores() -> None:
    scores = {"cas": 0.2, "mss": 0.4, "ois": None, "pas": 0.6, "tcs": 0.8}
    value = metric_aggregate(scores, "v", ("cas", "mss", "pas", "tcs"))
    assert value == pytest.approx(0.5)
    with pytest.raises(MissingScore):
        metric_aggregate(scores, "v", ("cas", "ois"))
    with pytest.raises(MissingScore):
        metric_aggregate(scores, "v", ("cas", "mss", "ois", "pas", "tcs"))


def test_pairwise_keep_pairs_reports_detail() -> None:
    human = human_table({"a": 1.0, "b": 5.0})
    scores = metric_scores({"a": 0.2, "b": 0.9})
    result = pairwise_accuracy(human, scores, {"p": ["a", "b"]}, keep_pairs=True)
    assert len(result.pairs) == 1
    pair = result.pairs[0]
    assert (pair.video_a, pair.video_b) == ("a", "b")
    assert pair.prompt_id == "p"
    assert pair.human_winner == "b"
    assert pair.metric_winner == "b"
    without = pairwise_accuracy(human, scores, {"p": ["a", "b"]})
    assert without.pairs == []


# ---------------------------------------------------------------------------
# Ablation


def test_default_ablation_subsets_shape() -> None:
    subsets = default_ablation_subsets()
    assert subsets[0] == ("cas", "mss", "ois", "pas", "tcs")
    assert len(subsets) == 9
    leave_one_out = subsets[1:6]
    for missing, subset in zip(("cas", "mss", "ois", "pas", "tcs"), leave_one_out):
        assert missing not in subset
        assert len(subset) == 4
    assert subsets[6:] == [("cas",), ("cas", "mss"), ("cas", "mss", "ois")]


def test_ablation_sweep_orders_results_like_subsets() -> None:
    human = human_table({"a": 1.0, "b": 5.0})
    scores = metric_scores({"a": 0.2, "b": 0.9})
    rows = ablation_sweep(human, scores, {"p": ["a", "b"]})
    assert [row.subset for row in rows] == default_ablation_subsets()
    assert all(row.accuracy == 1.0 for row in rows)


# ---------------------------------------------------------------------------
# Correlation structure


def test_correlation_matrix_diagonal_and_symmetry() -> None:
    rng = np.random.default_rng(53)
    scores = {}
    for i in range(30):
        v = rng.random(5)
        scores[f"v-{i}"] = dict(zip(("cas", "mss", "ois", "pas", "tcs"), v.tolist()))
    matrix = correlation_matrix(scores)
    assert matrix.shape == (5, 5)
    assert np.allclose(np.diag(matrix), 1.0)
    assert np.allclose(matrix, matrix.T, atol=1e-12)
    assert np.all(matrix >= -1.0) and np.all(matrix <= 1.0)


def test_correlation_matrix_skips_partial_videos() -> None:
    scores = metric_scores({"a": 0.1, "b": 0.5, "c": 0.9})
    scores["d"] = {"cas": 0.3, "mss": None, "ois": 0.3, "pas": 0.3, "tcs": 0.3}
    # columns identical across a,b,c: rho defined, d must not poison it
    matrix = correlation_matrix(scores)
    assert matrix[0, 1] == pytest.approx(1.0)


def test_correlation_matrix_degenerate_cases() -> None:
    with pytest.raises(DegenerateInput):
        correlation_matrix(metric_scores({"a": 0.5}))
    constant = metric_scores({"a": 0.5, "b": 0.5, "c": 0.5})
    with pytest.raises(DegenerateInput):
        correlation_matrix(constant)


def test_human_table_as_scores_lowercases_dimensions() -> None:
    table = human_table({"a": 4.0})
    scores = human_table_as_scores(table)
    assert scores == {"a": {"cas": 4.0, "mss": 4.0, "ois": 4.0, "pas": 4.0, "tcs": 4.0}}


# ---------------------------------------------------------------------------
# Derived five-level quality labels


def ladder_outcomes(n: int, prefix: str = "v") -> list[tuple[str, str, str]]:
    """Round robin where the higher index always wins: video k has win
    rate k/(n-1), strictly increasing with k."""
    ids = [f"{prefix}-{i:03d}" for i in range(n)]
    return [(ids[i], ids[j], "b") for i in range(n) for j in range(i + 1, n)]


def test_derive_commonsense_labels_quintiles() -> None:
    # 7 videos: split sizes 2,2,1,1,1 with lowest win rates in level 1
    labels = derive_commonsense_labels(ladder_outcomes(7))
    assert [labels[f"v-{i:03d}"] for i in range(7)] == [1, 1, 2, 2, 3, 4, 5]


@pytest.mark.parametrize("n", [5, 10, 23, 100])
def test_derive_commonsense_labels_sizes(n: int) -> None:
    labels = derive_commonsense_labels(ladder_outcomes(n))
    sizes = [sum(1 for level in labels.values() if level == k) for k in range(1, 6)]
    base, extra = divmod(n, 5)
    assert sizes == [base + 1] * extra + [base] * (5 - extra)
    # win rates never decrease with level
    for i in range(n - 1):
        assert labels[f"v-{i:03d}"] <= labels[f"v-{i + 1:03d}"]


def test_derive_commonsense_labels_tie_breaks_by_video_id() -> None:
    # all ties: every rate is zero, ordering falls back to the id
    outcomes = [("b", "a", "tie"), ("c", "d", "tie"), ("e", "a", "tie")]
    labels = derive_commonsense_labels(outcomes)
    assert labels == {"a": 1, "b": 2, "c": 3, "d": 4, "e": 5}


def test_derive_commonsense_labels_ties_count_as_comparisons() -> None:
    # a beats b once and ties b once: rate 0.5 for a, 0 for b
    outcomes = [("a", "b", "a"), ("a", "b", "tie")]
    labels = derive_commonsense_labels(outcomes)
    assert labels["b"] < labels["a"]


def test_derive_commonsense_labels_rejections() -> None:
    with pytest.raises(ValueError):
        derive_commonsense_labels([("a", "a", "tie")])
    with pytest.raises(ValueError):
        derive_commonsense_labels([("a", "b", "left")])
    with pytest.raises(DegenerateInput):
        derive_commonsense_labels([])


# ---------------------------------------------------------------------------
# Improvement report


def test_improvement_report_picks_best_baseline() -> None:
    report = improvement_report(
        ours=62.2,
        baselines=[("model-a", 20.1), ("model-c", 26.9), ("model-b", 26.9)],
    )
    assert report.best_baseline_name == "model-b"  # value tie broken by name
    assert report.best_baseline_value == 26.9
    assert report.delta == pytest.approx(35.3, abs=1e-9)


def test_improvement_report_requires_baselines() -> None:
    with pytest.raises(DegenerateInput):
        improvement_report(ours=50.0, baselines=[])
