"""Perception-backend adapter emitting motion-evaluation feature bundles."""
from .errors import BackendUnavailable, DecodeError, ExtractorError
from .extract import BackendSelection, ExtractionJob, ExtractionResult, run_extraction
from .fixture import write_black_clip, write_moving_square
from .video import DEFAULT_SAMPLING_FPS, decode_frames

__all__ = [
    "BackendSelection",
    "BackendUnavailable",
    "DEFAULT_SAMPLING_FPS",
    "DecodeError",
    "ExtractionJob",
    "ExtractionResult",
    "ExtractorError",
    "decode_frames",
    "run_extraction",
    "write_black_clip",
    "write_moving_square",
]
