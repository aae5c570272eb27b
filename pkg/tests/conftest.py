"""Shared builders for randomized and hand-crafted test inputs."""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))  # makes `oracles` importable

from vmbench.bundle import (
    ClassProbabilities,
    FeatureBundle,
    FrameQualitySeries,
    InstanceTrack,
    KeypointTrack,
    MOVEMENT_MODES,
    PointTrajectory,
    SceneContext,
)
from vmbench.calibration import (
    FallbackDefaults,
    MssThreshold,
    TcsRuleParams,
    ThresholdSet,
)
from vmbench.skeletons import SkeletonSchema

SCENARIOS = ("urban_dance", "river_flow", "machine_line", "storm_field", "flock_sky")


def make_quality(values, native_range=None) -> FrameQualitySeries:
    return FrameQualitySeries(q=np.asarray(values, dtype=float), native_range=native_range)


def make_instance(object_id: str, present, boxes=None, areas=None, centroids=None) -> InstanceTrack:
    """Instance track from a presence pattern; geometry defaults are derived
    from the box when only boxes are given."""
    present = [bool(v) for v in present]
    t = len(present)
    bbox, area, centroid = [], [], []
    for i in range(t):
        if not present[i]:
            bbox.append(None)
            area.append(None)
            centroid.append(None)
            continue
        box = boxes[i] if boxes is not None else (10.0, 10.0, 30.0, 30.0)
        bbox.append(tuple(float(v) for v in box))
        if areas is not None and areas[i] is not None:
            area.append(float(areas[i]))
        else:
            area.append((box[2] - box[0]) * (box[3] - box[1]))
        if centroids is not None and centroids[i] is not None:
            centroid.append(tuple(float(v) for v in centroids[i]))
        else:
            centroid.append(((box[0] + box[2]) / 2.0, (box[1] + box[3]) / 2.0))
    return InstanceTrack(
        object_id=object_id,
        present=np.asarray(present, dtype=bool),
        bbox=tuple(bbox),
        area=tuple(area),
        centroid=tuple(centroid),
    )


def make_bundle(
    video_id="vid-000",
    prompt_id="prompt-000",
    frame_count=None,
    quality=None,
    scenario="urban_dance",
    movement_mode="biological_motion",
    width=200,
    height=150,
    keypoint_tracks=(),
    instance_tracks=(),
    trajectories=(),
    class_probs=None,
) -> FeatureBundle:
    if quality is None:
        quality = make_quality([0.8] * (frame_count or 4))
    if frame_count is None:
        frame_count = quality.q.size
    return FeatureBundle(
        video_id=video_id,
        prompt_id=prompt_id,
        frame_count=frame_count,
        fps=8.0,
        width=width,
        height=height,
        scene=SceneContext(scenario_id=scenario, movement_mode=movement_mode),
        quality=quality,
        keypoint_tracks=tuple(keypoint_tracks),
        instance_tracks=tuple(instance_tracks),
        trajectories=tuple(trajectories),
        class_probs=None if class_probs is None else ClassProbabilities(p=tuple(class_probs)),
    )


def simple_thresholds(
    mss_base=0.1,
    mss_coeff=0.0,
    ois_length=0.2,
    ois_angle=0.3,
    pas=10.0,
    tcs=None,
    scenarios=SCENARIOS,
) -> ThresholdSet:
    entry = MssThreshold(base=mss_base, amplitude_coeff=mss_coeff)
    return ThresholdSet(
        mss={s: entry for s in scenarios},
        ois={"length": ois_length, "angle": ois_angle},
        pas={s: pas for s in scenarios},
        tcs_rules=tcs if tcs is not None else TcsRuleParams(),
        fallback=FallbackDefaults(mss=entry, ois_length=ois_length, ois_angle=ois_angle, pas=pas),
    )


# ---------------------------------------------------------------------------
# Randomized bundles for equivalence sweeps


def random_schema(rng: np.random.Generator, schema_id: str) -> SkeletonSchema:
    n = int(rng.integers(3, 7))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng.shuffle(pairs)
    n_len = int(rng.integers(1, min(5, len(pairs)) + 1))
    triples = [
        (i, j, k)
        for i in range(n)
        for j in range(n)
        for k in range(n)
        if len({i, j, k}) == 3 and i < k
    ]
    rng.shuffle(triples)
    n_ang = int(rng.integers(0, min(4, len(triples)) + 1))
    refs = None
    if rng.random() < 0.5:
        refs = tuple(float(rng.uniform(5.0, 80.0)) for _ in range(n_len))
    return SkeletonSchema(
        schema_id=schema_id,
        keypoint_names=tuple(f"kp{i}" for i in range(n)),
        length_components=tuple(pairs[:n_len]),
        angle_components=tuple(triples[:n_ang]),
        reference_lengths=refs,
    )


def random_instance(rng: np.random.Generator, object_id: str, t: int, width: int, height: int) -> InstanceTrack:
    present = rng.random(t) < 0.7
    bbox, area, centroid = [], [], []
    for i in range(t):
        if not present[i]:
            bbox.append(None)
            area.append(None)
            centroid.append(None)
            continue
        x0 = float(rng.uniform(0, width * 0.8))
        y0 = float(rng.uniform(0, height * 0.8))
        w = float(rng.uniform(0.5, width * 0.4))
        h = float(rng.uniform(0.5, height * 0.4))
        bbox.append((x0, y0, x0 + w, y0 + h))
        area.append(float(rng.uniform(0.0, w * h)))
        centroid.append((float(rng.uniform(0, width)), float(rng.uniform(0, height))))
    return InstanceTrack(
        object_id=object_id,
        present=present,
        bbox=tuple(bbox),
        area=tuple(area),
        centroid=tuple(centroid),
    )


def random_bundle(rng: np.random.Generator, video_id: str = "vid-rand"):
    """Small random bundle plus its private schema registry."""
    t = int(rng.integers(1, 11))
    width = int(rng.integers(32, 256))
    height = int(rng.integers(32, 256))
    scenario = SCENARIOS[int(rng.integers(0, len(SCENARIOS)))]
    mode = MOVEMENT_MODES[int(rng.integers(0, len(MOVEMENT_MODES)))]

    schemas = {}
    keypoint_tracks = []
    for k in range(int(rng.integers(0, 3))):
        schema = random_schema(rng, f"rand-{video_id}-{k}")
        schemas[schema.schema_id] = schema
        n = len(schema.keypoint_names)
        keypoint_tracks.append(
            KeypointTrack(
                subject_id=f"subj-{k}",
                schema_id=schema.schema_id,
                positions=rng.uniform(0, max(width, height), size=(t, n, 2)),
                visibility=rng.random((t, n)) < 0.8,
            )
        )

    instance_tracks = [
        random_instance(rng, f"obj-{k}", t, width, height)
        for k in range(int(rng.integers(0, 5)))
    ]

    trajectories = []
    for k in range(int(rng.integers(0, 4))):
        n = int(rng.integers(1, 5))
        trajectories.append(
            PointTrajectory(
                subject_id=f"traj-{k}",
                active=bool(rng.random() < 0.7),
                points=rng.uniform(0, max(width, height), size=(t, n, 2)),
                visible=rng.random((t, n)) < 0.85,
            )
        )

    class_probs = None
    if rng.random() < 0.7:
        raw = rng.dirichlet(np.ones(5))
        class_probs = ClassProbabilities(p=tuple(float(v) for v in raw))

    bundle = FeatureBundle(
        video_id=video_id,
        prompt_id="prompt-rand",
        frame_count=t,
        fps=8.0,
        width=width,
        height=height,
        scene=SceneContext(scenario_id=scenario, movement_mode=mode),
        quality=FrameQualitySeries(q=rng.uniform(0.0, 1.0, size=t)),
        keypoint_tracks=tuple(keypoint_tracks),
        instance_tracks=tuple(instance_tracks),
        trajectories=tuple(trajectories),
        class_probs=class_probs,
    )
    return bundle, schemas


def random_thresholds(rng: np.random.Generator) -> ThresholdSet:
    entry = MssThreshold(
        base=float(rng.uniform(0.01, 0.3)),
        amplitude_coeff=float(rng.uniform(0.0, 0.5)) if rng.random() < 0.5 else 0.0,
    )
    ois_length = float(rng.uniform(0.05, 0.5))
    ois_angle = float(rng.uniform(0.05, 1.0))
    pas = float(rng.uniform(1.0, 40.0))
    tcs = TcsRuleParams(
        cover_fraction=float(rng.uniform(0.3, 0.9)),
        boundary_margin_fraction=float(rng.uniform(0.02, 0.2)),
        depth_window=int(rng.integers(2, 7)),
        min_area_fraction=float(rng.uniform(0.0005, 0.01)),
    )
    return ThresholdSet(
        mss={s: entry for s in SCENARIOS},
        ois={"length": ois_length, "angle": ois_angle},
        pas={s: pas for s in SCENARIOS},
        tcs_rules=tcs,
        fallback=FallbackDefaults(mss=entry, ois_length=ois_length, ois_angle=ois_angle, pas=pas),
    )
