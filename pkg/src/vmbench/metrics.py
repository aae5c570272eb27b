"""The five perception-driven motion metrics.

Every metric maps a feature bundle (plus thresholds) to a unit score in
[0, 1], higher is better. Scoring never aborts a corpus run: per-metric
failures surface as absent scores with diagnostics in the report.

Conventions used throughout, written for 0-indexed arrays of length T:
a "transition" t compares frame t-1 to frame t, for t in 1..T-1, and the
printed normalizations divide by T (frame count), not by T-1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .bundle import (
    ClassProbabilities,
    FeatureBundle,
    FrameQualitySeries,
    InstanceTrack,
    KeypointTrack,
    PointTrajectory,
    SceneContext,
)
from .calibration import TcsRuleParams, ThresholdSet
from .errors import (
    EmptyEvidence,
    MissingThreshold,
    NoActiveSubject,
    SchemaMismatch,
)
from .skeletons import SkeletonSchema, get_schema

METRIC_NAMES = ("cas", "mss", "ois", "pas", "tcs")


@dataclass(frozen=True)
class MosMapping:
    """Per-class opinion weights, worst to best; fixed endpoints 0 and 1."""

    g: tuple[float, float, float, float, float] = (0.0, 0.25, 0.5, 0.75, 1.0)

    def __post_init__(self) -> None:
        if len(self.g) != 5:
            raise ValueError("MOS mapping needs exactly five weights")
        if any(b <= a for a, b in zip(self.g, self.g[1:])):
            raise ValueError("MOS weights must be strictly increasing")
        if self.g[0] != 0.0 or self.g[-1] != 1.0:
            raise ValueError("MOS weights must span [0, 1]")


DEFAULT_MOS_MAPPING = MosMapping()


# ---------------------------------------------------------------------------
# CAS: commonsense adherence


def compute_cas(probs: ClassProbabilities | None, mapping: MosMapping = DEFAULT_MOS_MAPPING) -> float:
    """Expected opinion score of the five-way class distribution."""
    if probs is None:
        raise EmptyEvidence("no class probabilities in bundle")
    return float(sum(p * g for p, g in zip(probs.p, mapping.g)))


# ---------------------------------------------------------------------------
# Shared motion amplitude (used by PAS and by MSS's adaptive threshold)


def amplitude_series(
    trajectories: Sequence[PointTrajectory], frame_count: int
) -> tuple[np.ndarray, np.ndarray]:
    """Mean displacement of visible active points per transition.

    Returns (amps, counts), both length T-1; amps[t-1] averages the
    point displacements between frames t-1 and t over active trajectories,
    counting only points visible at both ends. amps is 0 where counts is 0.
    """
    t_minus_1 = max(frame_count - 1, 0)
    sums = np.zeros(t_minus_1, dtype=float)
    counts = np.zeros(t_minus_1, dtype=int)
    for traj in trajectories:
        if not traj.active:
            continue
        both = traj.visible[:-1] & traj.visible[1:]  # (T-1, n)
        if not both.any():
            continue
        deltas = traj.points[1:] - traj.points[:-1]
        dist = np.hypot(deltas[..., 0], deltas[..., 1])
        sums += np.where(both, dist, 0.0).sum(axis=1)
        counts += both.sum(axis=1)
    amps = np.zeros(t_minus_1, dtype=float)
    nonzero = counts > 0
    amps[nonzero] = sums[nonzero] / counts[nonzero]
    return amps, counts


# ---------------------------------------------------------------------------
# MSS: motion smoothness


def _mss_thresholds(
    quality: FrameQualitySeries,
    scene: SceneContext,
    thresholds: ThresholdSet,
    amplitudes: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-transition quality drops and the tolerance each is compared to."""
    entry = thresholds.mss_for(scene.scenario_id)
    q = quality.q
    drops = q[:-1] - q[1:]
    if entry.amplitude_coeff > 0.0 and amplitudes is not None:
        tau = entry.base * (1.0 + entry.amplitude_coeff * np.asarray(amplitudes, dtype=float))
    else:
        tau = np.full(drops.shape, entry.base)
    return drops, tau


def compute_mss(
    quality: FrameQualitySeries,
    scene: SceneContext,
    thresholds: ThresholdSet,
    amplitudes: np.ndarray | None = None,
) -> float:
    """1 minus the fraction of frames with an abrupt quality drop.

    A transition violates when the drop strictly exceeds the tolerance;
    the fraction is taken over T frames, so a single-frame series scores 1.
    """
    drops, tau = _mss_thresholds(quality, scene, thresholds, amplitudes)
    violations = int(np.count_nonzero(drops > tau))
    return 1.0 - violations / quality.q.size


def mss_violating_frames(
    quality: FrameQualitySeries,
    scene: SceneContext,
    thresholds: ThresholdSet,
    amplitudes: np.ndarray | None = None,
) -> list[int]:
    """Frame indices t whose transition from t-1 broke the tolerance."""
    drops, tau = _mss_thresholds(quality, scene, thresholds, amplitudes)
    return [int(i) + 1 for i in np.nonzero(drops > tau)[0]]


# ---------------------------------------------------------------------------
# OIS: object integrity (skeleton consistency)


@dataclass(eq=False)
class DeviationTable:
    """Per-transition, per-component deviations; NaN marks unobserved cells.

    lengths: (T-1, n_length) relative bone-length change;
    angles: (T-1, n_angle) absolute joint-angle change in radians.
    """

    lengths: np.ndarray
    angles: np.ndarray
    references: np.ndarray  # per length component; NaN if never observed


def _frame_lengths(track: KeypointTrack, schema: SkeletonSchema) -> tuple[np.ndarray, np.ndarray]:
    """(T, n_len) segment lengths and their observedness."""
    n_len = len(schema.length_components)
    t = track.positions.shape[0]
    lengths = np.full((t, n_len), np.nan)
    observed = np.zeros((t, n_len), dtype=bool)
    for c, (i, j) in enumerate(schema.length_components):
        vis = track.visibility[:, i] & track.visibility[:, j]
        delta = track.positions[:, i, :] - track.positions[:, j, :]
        seg = np.hypot(delta[:, 0], delta[:, 1])
        lengths[vis, c] = seg[vis]
        observed[:, c] = vis
    return lengths, observed


def _frame_angles(track: KeypointTrack, schema: SkeletonSchema) -> tuple[np.ndarray, np.ndarray]:
    """(T, n_ang) joint angles in [0, pi] and their observedness.

    An angle is unobserved when any involved keypoint is invisible or a
    bounding vector is degenerate (zero length).
    """
    n_ang = len(schema.angle_components)
    t = track.positions.shape[0]
    angles = np.full((t, n_ang), np.nan)
    observed = np.zeros((t, n_ang), dtype=bool)
    for c, (i, j, k) in enumerate(schema.angle_components):
        vis = track.visibility[:, i] & track.visibility[:, j] & track.visibility[:, k]
        u = track.positions[:, i, :] - track.positions[:, j, :]
        v = track.positions[:, k, :] - track.positions[:, j, :]
        nu = np.hypot(u[:, 0], u[:, 1])
        nv = np.hypot(v[:, 0], v[:, 1])
        ok = vis & (nu > 0.0) & (nv > 0.0)
        dot = u[:, 0] * v[:, 0] + u[:, 1] * v[:, 1]
        with np.errstate(invalid="ignore", divide="ignore"):
            cos = np.clip(dot / (nu * nv), -1.0, 1.0)
        angles[ok, c] = np.arccos(cos[ok])
        observed[:, c] = ok
    return angles, observed


def deviation_table(track: KeypointTrack, schema: SkeletonSchema) -> DeviationTable:
    """Frame-to-frame skeleton deviations for one track.

    Length deviations are normalized by the schema's reference length, or
    by the first observed length of that component when the schema gives
    none; a cell is observed only when both endpoint frames are.
    """
    if track.positions.shape[1] != len(schema.keypoint_names):
        raise SchemaMismatch(
            f"track {track.subject_id!r} has {track.positions.shape[1]} keypoints, "
            f"schema {schema.schema_id!r} expects {len(schema.keypoint_names)}"
        )
    lengths, len_obs = _frame_lengths(track, schema)
    angles, ang_obs = _frame_angles(track, schema)
    n_len = len(schema.length_components)

    references = np.full(n_len, np.nan)
    for c in range(n_len):
        if schema.reference_lengths is not None:
            references[c] = schema.reference_lengths[c]
        else:
            seen = np.nonzero(len_obs[:, c] & (lengths[:, c] > 0.0))[0]
            if seen.size:
                references[c] = lengths[seen[0], c]

    both_len = len_obs[:-1] & len_obs[1:]
    len_dev = np.full((max(lengths.shape[0] - 1, 0), n_len), np.nan)
    for c in range(n_len):
        ref = references[c]
        if not np.isfinite(ref) or ref <= 0.0:
            continue
        rows = np.nonzero(both_len[:, c])[0]
        len_dev[rows, c] = np.abs(lengths[rows + 1, c] - lengths[rows, c]) / ref

    both_ang = ang_obs[:-1] & ang_obs[1:]
    ang_dev = np.full((max(angles.shape[0] - 1, 0), len(schema.angle_components)), np.nan)
    for c in range(ang_dev.shape[1]):
        rows = np.nonzero(both_ang[:, c])[0]
        ang_dev[rows, c] = np.abs(angles[rows + 1, c] - angles[rows, c])

    return DeviationTable(lengths=len_dev, angles=ang_dev, references=references)


def ois_counts(
    track: KeypointTrack, schema: SkeletonSchema, thresholds: ThresholdSet
) -> tuple[int, int]:
    """(compliant, observed) deviation cells for one track."""
    table = deviation_table(track, schema)
    compliant = 0
    observed = 0
    for kind, dev in (("length", table.lengths), ("angle", table.angles)):
        tau = thresholds.ois_for(kind)
        mask = np.isfinite(dev)
        observed += int(mask.sum())
        compliant += int(np.count_nonzero(dev[mask] <= tau))
    return compliant, observed


def compute_ois(
    track: KeypointTrack, schema: SkeletonSchema, thresholds: ThresholdSet
) -> float:
    """Fraction of observed skeleton cells whose deviation stays in tolerance."""
    compliant, observed = ois_counts(track, schema, thresholds)
    if observed == 0:
        raise EmptyEvidence(f"track {track.subject_id!r} has no observed deviation cells")
    return compliant / observed


# ---------------------------------------------------------------------------
# PAS: prompt-adherent motion amplitude


def compute_pas(
    trajectories: Sequence[PointTrajectory],
    scene: SceneContext,
    thresholds: ThresholdSet,
    frame_count: int,
) -> float:
    """Saturating mean displacement of the prompted subject's points.

    Each transition contributes min(mean displacement / tau, 1); transitions
    with no visible active points contribute 0; normalized by T.
    """
    if not any(traj.active for traj in trajectories):
        raise NoActiveSubject("no active trajectory in bundle")
    tau = thresholds.pas_for(scene.scenario_id)
    amps, counts = amplitude_series(trajectories, frame_count)
    terms = np.minimum(amps / tau, 1.0)
    terms[counts == 0] = 0.0
    return float(terms.sum() / frame_count)


# ---------------------------------------------------------------------------
# TCS: trajectory consistency (appear/disappear plausibility)


@dataclass(frozen=True)
class PresenceEvent:
    frame: int  # first frame of the new state
    kind: str   # "appear" | "disappear"


def presence_transitions(present: np.ndarray) -> list[PresenceEvent]:
    """Presence flips after the instance's first presence frame.

    The initial appearance is not an event; every later flip (including a
    final disappearance) is.
    """
    present = np.asarray(present, dtype=bool)
    if not present.any():
        return []
    first = int(np.argmax(present))
    events = []
    for t in range(1, present.size):
        if present[t] == present[t - 1]:
            continue
        kind = "appear" if present[t] else "disappear"
        if kind == "appear" and t == first:
            continue  # initial appearance, not a consistency event
        events.append(PresenceEvent(frame=t, kind=kind))
    return events


def _box_cover(occluder: tuple[float, ...], subject: tuple[float, ...]) -> float:
    """Fraction of the subject box covered by the occluder box."""
    sx0, sy0, sx1, sy1 = subject
    ox0, oy0, ox1, oy1 = occluder
    sub_area = (sx1 - sx0) * (sy1 - sy0)
    if sub_area <= 0.0:
        return 0.0
    ix = max(0.0, min(sx1, ox1) - max(sx0, ox0))
    iy = max(0.0, min(sy1, oy1) - max(sy0, oy0))
    return (ix * iy) / sub_area


def _occlusion_rule(
    inst: InstanceTrack,
    event: PresenceEvent,
    others: Sequence[InstanceTrack],
    params: TcsRuleParams,
) -> bool:
    if event.kind == "disappear":
        subject_box = inst.bbox[event.frame - 1]
        occluder_frame = event.frame
    else:
        subject_box = inst.bbox[event.frame]
        occluder_frame = event.frame - 1
    if subject_box is None:
        return False
    for other in others:
        if other.object_id == inst.object_id or not other.present[occluder_frame]:
            continue
        cover = _box_cover(other.bbox[occluder_frame], subject_box)
        if cover >= params.cover_fraction:
            return True
    return False


def _boundary_rule(
    inst: InstanceTrack, event: PresenceEvent, geometry: tuple[int, int], params: TcsRuleParams
) -> bool:
    width, height = geometry
    margin = params.boundary_margin_fraction * min(width, height)
    if event.kind == "disappear":
        anchor = event.frame - 1
        prev = event.frame - 2
        if prev < 0 or not inst.present[prev]:
            return False
        cx, cy = inst.centroid[anchor]
        px, py = inst.centroid[prev]
        vx, vy = cx - px, cy - py
        outward = 1.0
    else:
        anchor = event.frame
        nxt = event.frame + 1
        if nxt >= inst.present.size or not inst.present[nxt]:
            return False
        cx, cy = inst.centroid[anchor]
        nx, ny = inst.centroid[nxt]
        # inward motion after appearing mirrors outward motion before leaving
        vx, vy = nx - cx, ny - cy
        outward = -1.0
    if cx <= margin and outward * vx < 0.0:
        return True
    if cx >= width - margin and outward * vx > 0.0:
        return True
    if cy <= margin and outward * vy < 0.0:
        return True
    if cy >= height - margin and outward * vy > 0.0:
        return True
    return False


def _depth_rule(
    inst: InstanceTrack, event: PresenceEvent, geometry: tuple[int, int], params: TcsRuleParams
) -> bool:
    width, height = geometry
    small = params.min_area_fraction * width * height
    t = event.frame
    if event.kind == "disappear":
        run_end = t - 1
        run_start = run_end
        while run_start - 1 >= 0 and inst.present[run_start - 1]:
            run_start -= 1
        window = min(params.depth_window, run_end - run_start + 1)
        if window < 2:
            return False
        areas = [inst.area[s] for s in range(run_end - window + 1, run_end + 1)]
        shrinking = all(a > b for a, b in zip(areas, areas[1:]))
        return shrinking and areas[-1] < small
    run_start = t
    run_end = run_start
    while run_end + 1 < inst.present.size and inst.present[run_end + 1]:
        run_end += 1
    window = min(params.depth_window, run_end - run_start + 1)
    if window < 2:
        return False
    areas = [inst.area[s] for s in range(run_start, run_start + window)]
    growing = all(a < b for a, b in zip(areas, areas[1:]))
    return growing and areas[0] < small


def legitimate_transition(
    inst: InstanceTrack,
    event: PresenceEvent,
    all_instances: Sequence[InstanceTrack],
    geometry: tuple[int, int],
    params: TcsRuleParams | None = None,
) -> bool:
    """True when occlusion, boundary crossing, or depth recession excuses
    the presence flip."""
    params = params if params is not None else TcsRuleParams()
    return (
        _occlusion_rule(inst, event, all_instances, params)
        or _boundary_rule(inst, event, geometry, params)
        or _depth_rule(inst, event, geometry, params)
    )


def tcs_flags(
    instances: Sequence[InstanceTrack],
    geometry: tuple[int, int],
    params: TcsRuleParams | None = None,
) -> dict[str, bool]:
    """object_id -> anomalous (has a presence event no rule excuses)."""
    flags: dict[str, bool] = {}
    for inst in instances:
        events = presence_transitions(inst.present)
        flags[inst.object_id] = any(
            not legitimate_transition(inst, ev, instances, geometry, params) for ev in events
        )
    return flags


def compute_tcs(
    instances: Sequence[InstanceTrack],
    geometry: tuple[int, int],
    params: TcsRuleParams | None = None,
) -> float:
    """1 minus the fraction of instances with an unexcused presence event."""
    if not instances:
        raise EmptyEvidence("no instance tracks in bundle")
    flags = tcs_flags(instances, geometry, params)
    anomalous = sum(1 for bad in flags.values() if bad)
    return 1.0 - anomalous / len(instances)


# ---------------------------------------------------------------------------
# Bundle-level scoring


@dataclass
class MotionScoreReport:
    video_id: str
    scores: dict[str, float | None]
    average: float | None
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if set(self.scores) != set(METRIC_NAMES):
            raise ValueError(f"scores must cover exactly {METRIC_NAMES}")
        for name, value in self.scores.items():
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} score {value!r} outside [0, 1]")


def _present_average(scores: dict[str, float | None]) -> float | None:
    got = [v for v in scores.values() if v is not None]
    return sum(got) / len(got) if got else None


def score_bundle(
    bundle: FeatureBundle,
    thresholds: ThresholdSet,
    mapping: MosMapping = DEFAULT_MOS_MAPPING,
    schemas: dict[str, SkeletonSchema] | None = None,
) -> MotionScoreReport:
    """Score one bundle on all five metrics.

    Per-metric failures (missing evidence, missing thresholds, schema
    mismatches) leave that metric absent and are recorded in diagnostics;
    the average renormalizes over the metrics that are present.
    """
    scores: dict[str, float | None] = {name: None for name in METRIC_NAMES}
    diagnostics: dict[str, Any] = {"errors": {}}
    geometry = (bundle.width, bundle.height)

    def attempt(name, fn):
        try:
            scores[name] = fn()
        except (EmptyEvidence, NoActiveSubject, MissingThreshold, SchemaMismatch) as exc:
            diagnostics["errors"][name] = f"{type(exc).__name__}: {exc}"

    amps, _counts = amplitude_series(bundle.trajectories, bundle.frame_count)

    attempt("cas", lambda: compute_cas(bundle.class_probs, mapping))
    attempt(
        "mss",
        lambda: compute_mss(bundle.quality, bundle.scene, thresholds, amplitudes=amps),
    )

    def pooled_ois() -> float:
        compliant = 0
        observed = 0
        for track in bundle.keypoint_tracks:
            schema = get_schema(track.schema_id, schemas)
            comp, obs = ois_counts(track, schema, thresholds)
            compliant += comp
            observed += obs
        if observed == 0:
            raise EmptyEvidence("no observed skeleton deviation cells in bundle")
        diagnostics["ois"] = {"observed_cells": observed, "violations": observed - compliant}
        return compliant / observed

    attempt("ois", pooled_ois)
    attempt(
        "pas",
        lambda: compute_pas(bundle.trajectories, bundle.scene, thresholds, bundle.frame_count),
    )

    def tcs_with_flags() -> float:
        score = compute_tcs(bundle.instance_tracks, geometry, thresholds.tcs_rules)
        flags = tcs_flags(bundle.instance_tracks, geometry, thresholds.tcs_rules)
        diagnostics["tcs"] = {"anomalous_instances": sorted(k for k, bad in flags.items() if bad)}
        return score

    attempt("tcs", tcs_with_flags)

    if scores["mss"] is not None:
        diagnostics["mss"] = {
            "violating_frames": mss_violating_frames(
                bundle.quality, bundle.scene, thresholds, amplitudes=amps
            )
        }
    if not diagnostics["errors"]:
        del diagnostics["errors"]

    return MotionScoreReport(
        video_id=bundle.video_id,
        scores=scores,
        average=_present_average(scores),
        diagnostics=diagnostics,
    )


def score_corpus(
    bundles: Iterable[FeatureBundle],
    thresholds: ThresholdSet,
    mapping: MosMapping = DEFAULT_MOS_MAPPING,
    schemas: dict[str, SkeletonSchema] | None = None,
) -> dict[str, MotionScoreReport]:
    """video_id -> report, in deterministic (sorted) order."""
    reports: dict[str, MotionScoreReport] = {}
    for bundle in bundles:
        reports[bundle.video_id] = score_bundle(bundle, thresholds, mapping, schemas)
    return {vid: reports[vid] for vid in sorted(reports)}
