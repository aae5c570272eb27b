"""Per-video feature bundles: the typed container every metric consumes,
plus the JSON wire format and the corpus index.

A bundle holds pre-extracted evidence only (quality series, keypoints,
instance tracks, point trajectories, class probabilities); nothing here
touches pixels. Arrays are frame-major. Instances are treated as immutable
after construction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import SchemaError

SCHEMA_VERSION = "vmbench-bundle/1"
INDEX_FILENAME = "index.json"
PROB_SUM_TOL = 1e-6

MOVEMENT_MODES = (
    "fluid_dynamics",
    "biological_motion",
    "mechanical_motion",
    "weather_phenomena",
    "collective_behavior",
    "energy_transfer",
)

# class labels for the five-way commonsense quality head, worst to best
CLASS_LABELS = ("bad", "poor", "fair", "good", "perfect")

Box = tuple[float, float, float, float]  # (x0, y0, x1, y1)
Point = tuple[float, float]


@dataclass(frozen=True)
class SceneContext:
    scenario_id: str
    movement_mode: str

    def __post_init__(self) -> None:
        if not self.scenario_id:
            raise ValueError("scenario_id must be non-empty")
        if self.movement_mode not in MOVEMENT_MODES:
            raise ValueError(
                f"movement_mode {self.movement_mode!r} not one of {MOVEMENT_MODES}"
            )


@dataclass(eq=False)
class FrameQualitySeries:
    """Per-frame commonsense quality Q(f_t), normalized to [0, 1].

    native_range optionally records the scorer's raw scale before
    normalization, for provenance only.
    """

    q: np.ndarray
    native_range: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=float)
        if self.q.ndim != 1 or self.q.size < 1:
            raise SchemaError("quality series must be a non-empty 1-D array")
        if not np.all(np.isfinite(self.q)):
            raise ValueError("quality values must be finite")
        if np.any(self.q < 0.0) or np.any(self.q > 1.0):
            raise ValueError("quality values must lie in [0, 1]")
        if self.native_range is not None:
            lo, hi = self.native_range
            if not lo < hi:
                raise ValueError("native_range must satisfy lo < hi")
            self.native_range = (float(lo), float(hi))


@dataclass(eq=False)
class KeypointTrack:
    """One subject's skeleton keypoints over time.

    positions: (T, n_keypoints, 2) float; visibility: (T, n_keypoints) bool.
    Positions at invisible entries are carried but never read.
    """

    subject_id: str
    schema_id: str
    positions: np.ndarray
    visibility: np.ndarray

    def __post_init__(self) -> None:
        self.positions = np.asarray(self.positions, dtype=float)
        self.visibility = np.asarray(self.visibility, dtype=bool)
        if self.positions.ndim != 3 or self.positions.shape[2] != 2:
            raise SchemaError("keypoint positions must have shape (T, n, 2)")
        if self.visibility.shape != self.positions.shape[:2]:
            raise SchemaError("visibility shape must match positions (T, n)")
        if not np.all(np.isfinite(self.positions[self.visibility])):
            raise ValueError("visible keypoint positions must be finite")


@dataclass(eq=False)
class InstanceTrack:
    """One tracked object instance: presence flag plus per-frame geometry.

    bbox/area/centroid hold a value exactly on frames where present is True.
    """

    object_id: str
    present: np.ndarray
    bbox: tuple[Box | None, ...]
    area: tuple[float | None, ...]
    centroid: tuple[Point | None, ...]

    def __post_init__(self) -> None:
        self.present = np.asarray(self.present, dtype=bool)
        if self.present.ndim != 1:
            raise SchemaError("present must be a 1-D boolean array")
        t = self.present.size
        if not (len(self.bbox) == len(self.area) == len(self.centroid) == t):
            raise SchemaError("bbox/area/centroid must have one entry per frame")
        bbox, area, centroid = [], [], []
        for i in range(t):
            b, a, c = self.bbox[i], self.area[i], self.centroid[i]
            if self.present[i]:
                if b is None or a is None or c is None:
                    raise SchemaError(
                        f"instance {self.object_id!r}: present frame {i} missing geometry"
                    )
                x0, y0, x1, y1 = (float(v) for v in b)
                if not (x0 <= x1 and y0 <= y1):
                    raise ValueError(f"instance {self.object_id!r}: inverted bbox at frame {i}")
                a = float(a)
                if a < 0:
                    raise ValueError(f"instance {self.object_id!r}: negative area at frame {i}")
                bbox.append((x0, y0, x1, y1))
                area.append(a)
                centroid.append((float(c[0]), float(c[1])))
            else:
                if b is not None or a is not None or c is not None:
                    raise SchemaError(
                        f"instance {self.object_id!r}: absent frame {i} carries geometry"
                    )
                bbox.append(None)
                area.append(None)
                centroid.append(None)
        self.bbox = tuple(bbox)
        self.area = tuple(area)
        self.centroid = tuple(centroid)


@dataclass(eq=False)
class PointTrajectory:
    """Dense tracked points for one subject; active marks prompt relevance."""

    subject_id: str
    active: bool
    points: np.ndarray
    visible: np.ndarray

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=float)
        self.visible = np.asarray(self.visible, dtype=bool)
        if self.points.ndim != 3 or self.points.shape[2] != 2:
            raise SchemaError("trajectory points must have shape (T, n, 2)")
        if self.visible.shape != self.points.shape[:2]:
            raise SchemaError("visible shape must match points (T, n)")
        if not np.all(np.isfinite(self.points[self.visible])):
            raise ValueError("visible trajectory points must be finite")


@dataclass(frozen=True)
class ClassProbabilities:
    """Five-way distribution over CLASS_LABELS, worst to best."""

    p: tuple[float, float, float, float, float]

    def __post_init__(self) -> None:
        if len(self.p) != 5:
            raise SchemaError("class probabilities need exactly five entries")
        p = tuple(float(v) for v in self.p)
        if any(v < 0 for v in p):
            raise ValueError("class probabilities must be non-negative")
        if abs(sum(p) - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"class probabilities sum to {sum(p)!r}, expected 1")
        object.__setattr__(self, "p", p)


@dataclass(eq=False)
class FeatureBundle:
    video_id: str
    prompt_id: str
    frame_count: int
    fps: float
    width: int
    height: int
    scene: SceneContext
    quality: FrameQualitySeries
    keypoint_tracks: tuple[KeypointTrack, ...] = ()
    instance_tracks: tuple[InstanceTrack, ...] = ()
    trajectories: tuple[PointTrajectory, ...] = ()
    class_probs: ClassProbabilities | None = None
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise SchemaError(f"unsupported schema_version {self.schema_version!r}")
        if not self.video_id:
            raise ValueError("video_id must be non-empty")
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if not self.fps > 0:
            raise ValueError("fps must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("frame dimensions must be positive")
        self.keypoint_tracks = tuple(self.keypoint_tracks)
        self.instance_tracks = tuple(self.instance_tracks)
        self.trajectories = tuple(self.trajectories)
        t = self.frame_count
        if self.quality.q.size != t:
            raise SchemaError(f"quality series length {self.quality.q.size} != frame_count {t}")
        for tr in self.keypoint_tracks:
            if tr.positions.shape[0] != t:
                raise SchemaError(f"keypoint track {tr.subject_id!r} length != frame_count")
        for inst in self.instance_tracks:
            if inst.present.size != t:
                raise SchemaError(f"instance track {inst.object_id!r} length != frame_count")
        for traj in self.trajectories:
            if traj.points.shape[0] != t:
                raise SchemaError(f"trajectory {traj.subject_id!r} length != frame_count")
        ids = [i.object_id for i in self.instance_tracks]
        if len(set(ids)) != len(ids):
            raise SchemaError("duplicate instance object_id in bundle")


# ---------------------------------------------------------------------------
# JSON wire format


def bundle_to_dict(bundle: FeatureBundle) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "schema_version": bundle.schema_version,
        "video_id": bundle.video_id,
        "prompt_id": bundle.prompt_id,
        "frame_count": bundle.frame_count,
        "fps": bundle.fps,
        "width": bundle.width,
        "height": bundle.height,
        "scene": {
            "scenario_id": bundle.scene.scenario_id,
            "movement_mode": bundle.scene.movement_mode,
        },
        "quality": {"q": bundle.quality.q.tolist()},
        "keypoint_tracks": [
            {
                "subject_id": tr.subject_id,
                "schema_id": tr.schema_id,
                "positions": tr.positions.tolist(),
                "visibility": tr.visibility.tolist(),
            }
            for tr in bundle.keypoint_tracks
        ],
        "instance_tracks": [
            {
                "object_id": inst.object_id,
                "present": inst.present.tolist(),
                "bbox": [None if b is None else list(b) for b in inst.bbox],
                "area": list(inst.area),
                "centroid": [None if c is None else list(c) for c in inst.centroid],
            }
            for inst in bundle.instance_tracks
        ],
        "trajectories": [
            {
                "subject_id": traj.subject_id,
                "active": traj.active,
                "points": traj.points.tolist(),
                "visible": traj.visible.tolist(),
            }
            for traj in bundle.trajectories
        ],
    }
    if bundle.quality.native_range is not None:
        doc["quality"]["native_range"] = list(bundle.quality.native_range)
    if bundle.class_probs is not None:
        doc["class_probs"] = {"p": list(bundle.class_probs.p)}
    return doc


def bundle_from_dict(doc: dict[str, Any]) -> FeatureBundle:
    if not isinstance(doc, dict):
        raise SchemaError("bundle document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r}")
    try:
        quality_doc = doc["quality"]
        native = quality_doc.get("native_range")
        probs_doc = doc.get("class_probs")
        return FeatureBundle(
            video_id=doc["video_id"],
            prompt_id=doc["prompt_id"],
            frame_count=int(doc["frame_count"]),
            fps=float(doc["fps"]),
            width=int(doc["width"]),
            height=int(doc["height"]),
            scene=SceneContext(
                scenario_id=doc["scene"]["scenario_id"],
                movement_mode=doc["scene"]["movement_mode"],
            ),
            quality=FrameQualitySeries(
                q=quality_doc["q"],
                native_range=None if native is None else (native[0], native[1]),
            ),
            keypoint_tracks=tuple(
                KeypointTrack(
                    subject_id=tr["subject_id"],
                    schema_id=tr["schema_id"],
                    positions=tr["positions"],
                    visibility=tr["visibility"],
                )
                for tr in doc.get("keypoint_tracks", [])
            ),
            instance_tracks=tuple(
                InstanceTrack(
                    object_id=inst["object_id"],
                    present=inst["present"],
                    bbox=tuple(None if b is None else tuple(b) for b in inst["bbox"]),
                    area=tuple(inst["area"]),
                    centroid=tuple(None if c is None else tuple(c) for c in inst["centroid"]),
                )
                for inst in doc.get("instance_tracks", [])
            ),
            trajectories=tuple(
                PointTrajectory(
                    subject_id=traj["subject_id"],
                    active=bool(traj["active"]),
                    points=traj["points"],
                    visible=traj["visible"],
                )
                for traj in doc.get("trajectories", [])
            ),
            class_probs=None if probs_doc is None else ClassProbabilities(p=tuple(probs_doc["p"])),
        )
    except (KeyError, IndexError, TypeError) as exc:
        raise SchemaError(f"malformed bundle document: {exc!r}") from exc


def serialize_bundle(bundle: FeatureBundle) -> bytes:
    """Deterministic UTF-8 JSON; equal bundles serialize to equal bytes."""
    text = json.dumps(bundle_to_dict(bundle), sort_keys=True, indent=2, allow_nan=False)
    return (text + "\n").encode("utf-8")


def parse_bundle(data: bytes | str) -> FeatureBundle:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"bundle is not valid JSON: {exc}") from exc
    return bundle_from_dict(doc)


def save_bundle(bundle: FeatureBundle, path: str | Path) -> Path:
    path = Path(path)
    path.write_bytes(serialize_bundle(bundle))
    return path


def load_bundle(path: str | Path) -> FeatureBundle:
    return parse_bundle(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# Corpus index: maps video_id to bundle file, prompt and generating model.


@dataclass(frozen=True)
class CorpusEntry:
    video_id: str
    path: str  # relative to the corpus directory
    prompt_id: str
    model_name: str


@dataclass
class CorpusIndex:
    entries: dict[str, CorpusEntry] = field(default_factory=dict)

    def add(self, entry: CorpusEntry) -> None:
        if entry.video_id in self.entries:
            raise SchemaError(f"duplicate video_id {entry.video_id!r} in corpus index")
        self.entries[entry.video_id] = entry

    def video_ids(self) -> list[str]:
        return sorted(self.entries)

    def by_prompt(self) -> dict[str, list[str]]:
        """prompt_id -> sorted video ids, the grouping used for preference pairs."""
        groups: dict[str, list[str]] = {}
        for vid in self.video_ids():
            groups.setdefault(self.entries[vid].prompt_id, []).append(vid)
        return groups


def save_corpus_index(index: CorpusIndex, corpus_dir: str | Path) -> Path:
    doc = {
        "schema_version": "vmbench-index/1",
        "videos": [
            {
                "video_id": e.video_id,
                "path": e.path,
                "prompt_id": e.prompt_id,
                "model_name": e.model_name,
            }
            for e in (index.entries[v] for v in index.video_ids())
        ],
    }
    path = Path(corpus_dir) / INDEX_FILENAME
    text = json.dumps(doc, sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def load_corpus_index(corpus_dir: str | Path) -> CorpusIndex:
    path = Path(corpus_dir) / INDEX_FILENAME
    if not path.is_file():
        raise SchemaError(f"no {INDEX_FILENAME} in {corpus_dir}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    index = CorpusIndex()
    try:
        for entry in doc["videos"]:
            index.add(
                CorpusEntry(
                    video_id=entry["video_id"],
                    path=entry["path"],
                    prompt_id=entry["prompt_id"],
                    model_name=entry["model_name"],
                )
            )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{path}: malformed index: {exc!r}") from exc
    return index


def load_corpus_bundle(corpus_dir: str | Path, entry: CorpusEntry) -> FeatureBundle:
    return load_bundle(Path(corpus_dir) / entry.path)
