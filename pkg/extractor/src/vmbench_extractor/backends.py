"""One adapter per perception role, behind string-keyed registries.

Each role pins one open implementation that runs on CPU; anything else
resolves to BackendUnavailable so substitution stays explicit. Pose
estimation and the five-way quality classifier ship with no default
implementation ("none"): bundles simply omit those fields and the
scoring side treats them as absent evidence.
"""
from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

from .errors import BackendUnavailable


@dataclass(frozen=True)
class Detection:
    box: tuple[float, float, float, float]
    area: float
    centroid: tuple[float, float]


class LaplacianSharpness:
    """Frame quality as variance of the Laplacian (focus measure).

    Native units are unbounded; FULL_SCALE is the variance treated as
    fully sharp, and normalized scores clip into [0, 1]. The native
    range travels in bundle metadata so the raw scale stays auditable.
    """

    name = "laplacian-sharpness"
    FULL_SCALE = 2000.0

    @property
    def version(self) -> str:
        return f"opencv-{cv2.__version__}"

    @property
    def native_range(self) -> tuple[float, float]:
        return (0.0, self.FULL_SCALE)

    def score(self, gray: np.ndarray) -> float:
        return float(cv2.Laplacian(gray, cv2.CV_64F).var())

    def normalize(self, native: float) -> float:
        return min(1.0, max(0.0, native / self.FULL_SCALE))


class BrightnessDetector:
    """Subject proposals as bright connected components.

    A fixed luminance threshold (not Otsu: constant frames must yield
    nothing, not noise) followed by connected components; blobs under
    min_area are dropped. Component order is remapped to descending
    area so detection index 0 is always the dominant subject.
    """

    name = "brightness-threshold"

    def __init__(self, threshold: int = 96, min_area: float = 25.0):
        if not 0 < threshold < 255:
            raise ValueError("threshold must be inside (0, 255)")
        self.threshold = threshold
        self.min_area = min_area

    @property
    def version(self) -> str:
        return f"opencv-{cv2.__version__}"

    def detect(self, gray: np.ndarray) -> list[Detection]:
        _, mask = cv2.threshold(gray, self.threshold, 255, cv2.THRESH_BINARY)
        count, _, stats, centroids = cv2.connectedComponentsWithStats(mask, connectivity=8)
        found = []
        for label in range(1, count):  # background is label 0
            x, y, w, h, area = (float(v) for v in stats[label])
            if area < self.min_area:
                continue
            cx, cy = (float(v) for v in centroids[label])
            found.append(
                Detection(box=(x, y, x + w, y + h), area=area, centroid=(cx, cy))
            )
        found.sort(key=lambda d: (-d.area, d.centroid))
        return found


class LucasKanadeGrid:
    """Dense point tracking: a uniform grid seeded in a box, then
    pyramidal Lucas-Kanade frame to frame. Lost points keep their last
    position and go invisible for the rest of the clip."""

    name = "lucas-kanade-grid"

    def __init__(self, grid_step: int = 8, margin: int = 2):
        if grid_step < 1:
            raise ValueError("grid_step must be >= 1")
        self.grid_step = grid_step
        self.margin = margin

    @property
    def version(self) -> str:
        return f"opencv-{cv2.__version__}"

    def seed(self, box: tuple[float, float, float, float]) -> np.ndarray:
        x0, y0, x1, y1 = box
        xs = np.arange(x0 + self.margin, x1 - self.margin + 1e-9, self.grid_step)
        ys = np.arange(y0 + self.margin, y1 - self.margin + 1e-9, self.grid_step)
        if xs.size == 0 or ys.size == 0:  # box thinner than the margin: seed its center
            return np.asarray([[(x0 + x1) / 2.0, (y0 + y1) / 2.0]], dtype=np.float32)
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx.ravel(), gy.ravel()], axis=1).astype(np.float32)

    def track(self, frames: np.ndarray, seeds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        t, n = frames.shape[0], seeds.shape[0]
        points = np.zeros((t, n, 2), dtype=float)
        visible = np.zeros((t, n), dtype=bool)
        points[0] = seeds
        visible[0] = True
        current = seeds.reshape(-1, 1, 2)
        alive = np.ones(n, dtype=bool)
        for i in range(1, t):
            nxt, status, _ = cv2.calcOpticalFlowPyrLK(
                frames[i - 1], frames[i], current, None, winSize=(15, 15), maxLevel=2
            )
            ok = status.ravel().astype(bool) & alive
            current = np.where(ok.reshape(-1, 1, 1), nxt, current)
            alive = ok
            points[i] = current.reshape(-1, 2)
            visible[i] = alive
        return points, visible


_QUALITY = {LaplacianSharpness.name: LaplacianSharpness}
_DETECTOR = {BrightnessDetector.name: BrightnessDetector}
_POINTS = {LucasKanadeGrid.name: LucasKanadeGrid}
_POSE: dict[str, type] = {}  # no CPU-friendly default shipped
_CLASSIFIER: dict[str, type] = {}

_REGISTRY = {
    "quality": (_QUALITY, False),
    "detector": (_DETECTOR, False),
    "points": (_POINTS, False),
    "pose": (_POSE, True),  # True: "none" is a legal selection
    "classifier": (_CLASSIFIER, True),
}


def resolve(role: str, name: str):
    """Instantiate the named backend for a role; None when a role that
    allows it is set to "none"."""
    registry, allow_none = _REGISTRY[role]
    if allow_none and name == "none":
        return None
    cls = registry.get(name)
    if cls is None:
        options = tuple(sorted(registry)) + (("none",) if allow_none else ())
        raise BackendUnavailable(role, name, options)
    return cls()
