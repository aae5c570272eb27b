"""Extraction jobs: one video in, one schema-valid bundle file out."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import backends, serialize, tracking, video

_ARTICLES = {"a", "an", "the", "one", "two", "three"}


@dataclass(frozen=True)
class BackendSelection:
    quality: str = "laplacian-sharpness"
    detector: str = "brightness-threshold"
    points: str = "lucas-kanade-grid"
    pose: str = "none"
    classifier: str = "none"


@dataclass
class ExtractionJob:
    video_path: Path
    prompt: str
    out_path: Path
    video_id: str = ""
    prompt_id: str = "prompt-unknown"
    target_fps: float = video.DEFAULT_SAMPLING_FPS
    scenario_id: str = "unspecified"
    movement_mode: str = "mechanical_motion"
    selection: BackendSelection = field(default_factory=BackendSelection)

    def __post_init__(self) -> None:
        self.video_path = Path(self.video_path)
        self.out_path = Path(self.out_path)
        if not self.video_id:
            self.video_id = self.video_path.stem
        if not self.target_fps > 0:
            raise ValueError("target_fps must be positive")


@dataclass
class ExtractionResult:
    doc: dict[str, Any]
    path: Path
    diagnostics: list[str]
    backend_versions: dict[str, str]


def grounding_phrase(prompt: str) -> str:
    """Leading noun-ish words of the prompt: articles stripped, at most
    four tokens. Used only to label what the detector was looking for."""
    words = [w.strip(".,;:") for w in prompt.lower().split()]
    words = [w for w in words if w and w not in _ARTICLES]
    return " ".join(words[:4])


def run_extraction(job: ExtractionJob) -> ExtractionResult:
    quality_backend = backends.resolve("quality", job.selection.quality)
    detector = backends.resolve("detector", job.selection.detector)
    point_tracker = backends.resolve("points", job.selection.points)
    pose_backend = backends.resolve("pose", job.selection.pose)
    classifier = backends.resolve("classifier", job.selection.classifier)

    clip = video.decode_frames(job.video_path, job.target_fps)
    diagnostics: list[str] = []
    versions = {
        "quality": quality_backend.version,
        "detector": detector.version,
        "points": point_tracker.version,
    }

    quality = [quality_backend.normalize(quality_backend.score(f)) for f in clip.frames]

    per_frame = [detector.detect(f) for f in clip.frames]
    records = tracking.associate_tracks(per_frame)
    instance_tracks = [
        {
            "object_id": r.object_id,
            "present": r.present,
            "bbox": [None if b is None else list(b) for b in r.bbox],
            "area": r.area,
            "centroid": [None if c is None else list(c) for c in r.centroid],
        }
        for r in records
    ]

    trajectories: list[dict[str, Any]] = []
    phrase = grounding_phrase(job.prompt)
    first_frame = [r for r in records if r.present[0]]
    if first_frame:
        # anchor dense points to the dominant frame-0 subject; it is the
        # one the prompt's subject phrase grounds to in this pipeline
        anchor = max(first_frame, key=lambda r: r.area[0] or 0.0)
        seeds = point_tracker.seed(anchor.bbox[0])
        points, visible = point_tracker.track(clip.frames, seeds)
        trajectories.append(
            {
                "subject_id": anchor.object_id,
                "active": True,
                "points": points.tolist(),
                "visible": visible.tolist(),
            }
        )
    if not records:
        diagnostics.append(
            f"GroundingEmpty: no subject found for phrase {phrase!r}; "
            "bundle emitted with empty tracks"
        )

    keypoint_tracks: list[dict[str, Any]] = []
    if pose_backend is not None:  # no default implementation ships
        versions["pose"] = pose_backend.version
        keypoint_tracks = pose_backend.estimate(clip.frames, records)
    class_probs = None
    if classifier is not None:
        versions["classifier"] = classifier.version
        class_probs = classifier.classify(clip.frames)

    doc = serialize.build_bundle_doc(
        video_id=job.video_id,
        prompt_id=job.prompt_id,
        frame_count=clip.frame_count,
        fps=clip.sampled_fps,
        width=clip.width,
        height=clip.height,
        scenario_id=job.scenario_id,
        movement_mode=job.movement_mode,
        quality=quality,
        native_range=quality_backend.native_range,
        keypoint_tracks=keypoint_tracks,
        instance_tracks=instance_tracks,
        trajectories=trajectories,
        class_probs=class_probs,
    )
    serialize.validate_doc(doc)
    job.out_path.parent.mkdir(parents=True, exist_ok=True)
    job.out_path.write_bytes(serialize.dump_bundle_doc(doc))
    return ExtractionResult(
        doc=doc, path=job.out_path, diagnostics=diagnostics, backend_versions=versions
    )
