"""Greedy centroid association: per-frame detections into instance tracks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .backends import Detection


@dataclass
class InstanceRecord:
    object_id: str
    present: list[bool] = field(default_factory=list)
    bbox: list[tuple[float, float, float, float] | None] = field(default_factory=list)
    area: list[float | None] = field(default_factory=list)
    centroid: list[tuple[float, float] | None] = field(default_factory=list)

    def push(self, det: Detection | None) -> None:
        self.present.append(det is not None)
        self.bbox.append(det.box if det else None)
        self.area.append(det.area if det else None)
        self.centroid.append(det.centroid if det else None)


def _distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def associate_tracks(
    detections_per_frame: list[list[Detection]], max_jump: float = 40.0
) -> list[InstanceRecord]:
    """Nearest-centroid greedy matching frame to frame.

    A track's anchor is its last observed centroid, so tracks survive
    gaps (the matcher may re-acquire after missed frames if the subject
    has not moved beyond max_jump). Unmatched detections open new
    tracks, padded absent for earlier frames; ids follow spawn order.
    """
    tracks: list[InstanceRecord] = []
    anchors: list[tuple[float, float] | None] = []
    for frame_index, detections in enumerate(detections_per_frame):
        pairs = []
        for ti, anchor in enumerate(anchors):
            if anchor is None:
                continue
            for di, det in enumerate(detections):
                d = _distance(anchor, det.centroid)
                if d <= max_jump:
                    pairs.append((d, ti, di))
        pairs.sort()
        matched_t: dict[int, int] = {}
        used_d: set[int] = set()
        for _, ti, di in pairs:
            if ti in matched_t or di in used_d:
                continue
            matched_t[ti] = di
            used_d.add(di)
        for ti, track in enumerate(tracks):
            det = detections[matched_t[ti]] if ti in matched_t else None
            track.push(det)
            if det is not None:
                anchors[ti] = det.centroid
        for di, det in enumerate(detections):
            if di in used_d:
                continue
            record = InstanceRecord(object_id=f"subject-{len(tracks):02d}")
            for _ in range(frame_index):
                record.push(None)
            record.push(det)
            tracks.append(record)
            anchors.append(det.centroid)
    return tracks
