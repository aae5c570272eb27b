"""Skeleton schemas: which keypoint pairs have stable lengths and which
triples form joint angles.

Two schemas ship built in (a 17-point human in COCO order and a 17-point
quadruped in AP-10K order); extra schemas can be merged from a JSON file.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import SchemaError


@dataclass(frozen=True)
class SkeletonSchema:
    schema_id: str
    keypoint_names: tuple[str, ...]
    # (i, j) pairs whose distance should stay constant for a rigid subject
    length_components: tuple[tuple[int, int], ...]
    # (i, j, k) triples, angle measured at the middle index j
    angle_components: tuple[tuple[int, int, int], ...]
    # optional per-pair reference length in pixels, aligned with length_components
    reference_lengths: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        n = len(self.keypoint_names)
        if n == 0:
            raise SchemaError(f"schema {self.schema_id!r} has no keypoints")
        for i, j in self.length_components:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise SchemaError(f"schema {self.schema_id!r}: bad length component ({i}, {j})")
        for i, j, k in self.angle_components:
            if not all(0 <= v < n for v in (i, j, k)) or len({i, j, k}) != 3:
                raise SchemaError(f"schema {self.schema_id!r}: bad angle component ({i}, {j}, {k})")
        if len(set(self.length_components)) != len(self.length_components):
            raise SchemaError(f"schema {self.schema_id!r}: duplicate length component")
        if len(set(self.angle_components)) != len(self.angle_components):
            raise SchemaError(f"schema {self.schema_id!r}: duplicate angle component")
        if self.reference_lengths is not None:
            if len(self.reference_lengths) != len(self.length_components):
                raise SchemaError(
                    f"schema {self.schema_id!r}: reference_lengths must align with length_components"
                )
            if any(r <= 0 for r in self.reference_lengths):
                raise SchemaError(f"schema {self.schema_id!r}: reference lengths must be positive")

    @property
    def component_count(self) -> int:
        return len(self.length_components) + len(self.angle_components)


_HUMAN_KEYPOINTS = (
    "nose", "left_eye", "right_eye", "left_ear", "right_ear",
    "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
    "left_wrist", "right_wrist", "left_hip", "right_hip",
    "left_knee", "right_knee", "left_ankle", "right_ankle",
)

HUMAN_17 = SkeletonSchema(
    schema_id="human-17",
    keypoint_names=_HUMAN_KEYPOINTS,
    length_components=(
        (5, 7), (7, 9), (6, 8), (8, 10),      # arms
        (11, 13), (13, 15), (12, 14), (14, 16),  # legs
        (5, 6), (11, 12), (5, 11), (6, 12),   # torso
        (0, 1), (0, 2), (1, 3), (2, 4),       # face
    ),
    angle_components=(
        (5, 7, 9), (6, 8, 10),    # elbows
        (11, 13, 15), (12, 14, 16),  # knees
        (7, 5, 11), (8, 6, 12),   # shoulders
        (5, 11, 13), (6, 12, 14),  # hips
    ),
)

_QUADRUPED_KEYPOINTS = (
    "left_eye", "right_eye", "nose", "neck", "tail_root",
    "left_shoulder", "left_elbow", "left_front_paw",
    "right_shoulder", "right_elbow", "right_front_paw",
    "left_hip", "left_knee", "left_back_paw",
    "right_hip", "right_knee", "right_back_paw",
)

QUADRUPED_17 = SkeletonSchema(
    schema_id="quadruped-17",
    keypoint_names=_QUADRUPED_KEYPOINTS,
    length_components=(
        (0, 2), (1, 2), (2, 3), (3, 4),       # head and spine
        (3, 5), (5, 6), (6, 7),               # left front leg
        (3, 8), (8, 9), (9, 10),              # right front leg
        (4, 11), (11, 12), (12, 13),          # left back leg
        (4, 14), (14, 15), (15, 16),          # right back leg
    ),
    angle_components=(
        (5, 6, 7), (8, 9, 10),    # front knees
        (11, 12, 13), (14, 15, 16),  # back knees
        (3, 5, 6), (3, 8, 9),     # shoulders
        (4, 11, 12), (4, 14, 15),  # hips
        (2, 3, 4),                # spine
    ),
)

BUILTIN_SCHEMAS: dict[str, SkeletonSchema] = {
    HUMAN_17.schema_id: HUMAN_17,
    QUADRUPED_17.schema_id: QUADRUPED_17,
}


def get_schema(schema_id: str, registry: dict[str, SkeletonSchema] | None = None) -> SkeletonSchema:
    """Look up a schema by id; `registry` defaults to the built-ins."""
    table = BUILTIN_SCHEMAS if registry is None else registry
    try:
        return table[schema_id]
    except KeyError:
        raise SchemaError(f"unknown skeleton schema {schema_id!r}") from None


def schema_from_dict(doc: dict) -> SkeletonSchema:
    try:
        refs = doc.get("reference_lengths")
        return SkeletonSchema(
            schema_id=doc["schema_id"],
            keypoint_names=tuple(doc["keypoint_names"]),
            length_components=tuple((int(i), int(j)) for i, j in doc["length_components"]),
            angle_components=tuple((int(i), int(j), int(k)) for i, j, k in doc["angle_components"]),
            reference_lengths=None if refs is None else tuple(float(r) for r in refs),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed schema document: {exc}") from exc


def schema_to_dict(schema: SkeletonSchema) -> dict:
    doc = {
        "schema_id": schema.schema_id,
        "keypoint_names": list(schema.keypoint_names),
        "length_components": [list(c) for c in schema.length_components],
        "angle_components": [list(c) for c in schema.angle_components],
    }
    if schema.reference_lengths is not None:
        doc["reference_lengths"] = list(schema.reference_lengths)
    return doc


def load_schema_registry(path: str | Path) -> dict[str, SkeletonSchema]:
    """Built-in schemas plus any defined in the JSON file at `path`."""
    registry = dict(BUILTIN_SCHEMAS)
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    entries = doc.get("schemas") if isinstance(doc, dict) else None
    if not isinstance(entries, list):
        raise SchemaError(f"{path}: expected an object with a 'schemas' list")
    for entry in entries:
        schema = schema_from_dict(entry)
        registry[schema.schema_id] = schema
    return registry
