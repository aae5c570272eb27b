"""Clip decoding with frame-rate resampling.

Frames come back grayscale (uint8): every shipped backend works on
luminance only. Sampling keeps every k-th frame where k approximates
native_fps / target_fps; the effective rate is recorded so bundle fps
reflects what was actually kept, not what was asked for.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .errors import DecodeError

DEFAULT_SAMPLING_FPS = 2.0  # protocol default; override per job


@dataclass
class SampledClip:
    frames: np.ndarray  # (T, H, W) uint8 grayscale
    sampled_fps: float
    native_fps: float
    width: int
    height: int

    @property
    def frame_count(self) -> int:
        return int(self.frames.shape[0])


def decode_frames(path: str | Path, target_fps: float = DEFAULT_SAMPLING_FPS) -> SampledClip:
    if not target_fps > 0:
        raise ValueError(f"target_fps must be positive, got {target_fps!r}")
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise DecodeError(f"cannot open video: {path}")
    try:
        native_fps = float(cap.get(cv2.CAP_PROP_FPS))
        if not native_fps > 0:
            native_fps = target_fps  # container gave nothing usable; keep every frame
        stride = max(1, round(native_fps / target_fps))
        kept = []
        index = 0
        while True:
            ok, frame = cap.read()
            if not ok:
                break
            if index % stride == 0:
                kept.append(cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY))
            index += 1
    finally:
        cap.release()
    if len(kept) < 2:
        raise DecodeError(
            f"{path}: {len(kept)} frame(s) after sampling at {target_fps} fps; need at least 2"
        )
    frames = np.stack(kept)
    return SampledClip(
        frames=frames,
        sampled_fps=native_fps / stride,
        native_fps=native_fps,
        width=int(frames.shape[2]),
        height=int(frames.shape[1]),
    )
