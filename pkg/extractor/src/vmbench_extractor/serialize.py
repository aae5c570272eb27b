"""Feature-bundle wire format, writer side.

This mirrors the consumer's JSON layout ("vmbench-bundle/1") field for
field and byte for byte (sorted keys, two-space indent, trailing
newline) without importing the consumer: the file format is the whole
contract between the two packages. validate_doc re-checks the shape
discipline the consumer will enforce so a malformed extraction fails
here, at the producer, with a usable message.
"""
from __future__ import annotations

import json
from typing import Any

BUNDLE_SCHEMA_VERSION = "vmbench-bundle/1"
INDEX_SCHEMA_VERSION = "vmbench-index/1"

MOVEMENT_MODES = (
    "fluid_dynamics",
    "biological_motion",
    "mechanical_motion",
    "weather_phenomena",
    "collective_behavior",
    "energy_transfer",
)


def build_bundle_doc(
    *,
    video_id: str,
    prompt_id: str,
    frame_count: int,
    fps: float,
    width: int,
    height: int,
    scenario_id: str,
    movement_mode: str,
    quality: list[float],
    native_range: tuple[float, float] | None,
    keypoint_tracks: list[dict[str, Any]],
    instance_tracks: list[dict[str, Any]],
    trajectories: list[dict[str, Any]],
    class_probs: list[float] | None,
) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "schema_version": BUNDLE_SCHEMA_VERSION,
        "video_id": video_id,
        "prompt_id": prompt_id,
        "frame_count": frame_count,
        "fps": fps,
        "width": width,
        "height": height,
        "scene": {"scenario_id": scenario_id, "movement_mode": movement_mode},
        "quality": {"q": quality},
        "keypoint_tracks": keypoint_tracks,
        "instance_tracks": instance_tracks,
        "trajectories": trajectories,
    }
    if native_range is not None:
        doc["quality"]["native_range"] = [float(native_range[0]), float(native_range[1])]
    if class_probs is not None:
        doc["class_probs"] = {"p": class_probs}
    return doc


def validate_doc(doc: dict[str, Any]) -> None:
    t = doc["frame_count"]
    if t < 2:
        raise ValueError(f"frame_count {t} below the two-frame minimum")
    if doc["scene"]["movement_mode"] not in MOVEMENT_MODES:
        raise ValueError(f"movement_mode {doc['scene']['movement_mode']!r} not recognized")
    if len(doc["quality"]["q"]) != t:
        raise ValueError("quality series length != frame_count")
    if any(not 0.0 <= q <= 1.0 for q in doc["quality"]["q"]):
        raise ValueError("normalized quality left [0, 1]")
    for track in doc["keypoint_tracks"]:
        if len(track["positions"]) != t or len(track["visibility"]) != t:
            raise ValueError(f"keypoint track {track['subject_id']!r} length != frame_count")
    for inst in doc["instance_tracks"]:
        series = (inst["present"], inst["bbox"], inst["area"], inst["centroid"])
        if any(len(s) != t for s in series):
            raise ValueError(f"instance track {inst['object_id']!r} length != frame_count")
        for flag, box, area, cent in zip(*series):
            if flag != (box is not None) or flag != (area is not None) or flag != (cent is not None):
                raise ValueError(
                    f"instance track {inst['object_id']!r}: geometry does not match presence"
                )
    for traj in doc["trajectories"]:
        if len(traj["points"]) != t or len(traj["visible"]) != t:
            raise ValueError(f"trajectory {traj['subject_id']!r} length != frame_count")


def dump_bundle_doc(doc: dict[str, Any]) -> bytes:
    text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False)
    return (text + "\n").encode("utf-8")


def build_index_doc(entries: list[dict[str, str]]) -> dict[str, Any]:
    return {
        "schema_version": INDEX_SCHEMA_VERSION,
        "videos": sorted(entries, key=lambda e: e["video_id"]),
    }


def dump_index_doc(doc: dict[str, Any]) -> bytes:
    text = json.dumps(doc, sort_keys=True, indent=2)
    return (text + "\n").encode("utf-8")
