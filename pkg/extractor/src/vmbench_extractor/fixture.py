"""Synthetic test clips with known geometry."""
from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

Box = tuple[float, float, float, float]


def write_moving_square(
    path: str | Path,
    frame_count: int = 16,
    width: int = 160,
    height: int = 120,
    size: int = 24,
    start: tuple[int, int] = (8, 10),
    step: tuple[int, int] = (6, 2),
    fps: float = 8.0,
    background: int = 10,
    foreground: int = 230,
) -> list[Box]:
    """Bright square drifting over a dark field; returns the true
    per-frame boxes so tests can measure tracker error."""
    x0, y0 = start
    dx, dy = step
    last_x = x0 + dx * (frame_count - 1) + size
    last_y = y0 + dy * (frame_count - 1) + size
    if last_x > width or last_y > height or x0 < 0 or y0 < 0:
        raise ValueError("square leaves the frame; shrink step or frame_count")
    writer = cv2.VideoWriter(
        str(path), cv2.VideoWriter_fourcc(*"MJPG"), fps, (width, height)
    )
    if not writer.isOpened():
        raise RuntimeError(f"cannot open video writer for {path}")
    truth: list[Box] = []
    try:
        for i in range(frame_count):
            x = x0 + dx * i
            y = y0 + dy * i
            frame = np.full((height, width, 3), background, np.uint8)
            frame[y : y + size, x : x + size] = foreground
            writer.write(frame)
            truth.append((float(x), float(y), float(x + size), float(y + size)))
    finally:
        writer.release()
    return truth


def write_black_clip(
    path: str | Path,
    frame_count: int = 8,
    width: int = 160,
    height: int = 120,
    fps: float = 8.0,
) -> None:
    writer = cv2.VideoWriter(
        str(path), cv2.VideoWriter_fourcc(*"MJPG"), fps, (width, height)
    )
    if not writer.isOpened():
        raise RuntimeError(f"cannot open video writer for {path}")
    try:
        for _ in range(frame_count):
            writer.write(np.zeros((height, width, 3), np.uint8))
    finally:
        writer.release()
