"""Capture station and operator console for the face-control engine.

Four pieces: the wire codec (`codec`), the camera-to-engine capture loop
(`capture`), the guided calibration session (`session`), the threshold
tuner (`tuner`), plus overlay layout/painting (`overlay`, `window`).
Everything talks to the engine only through its public surfaces: the
frame line format, the snapshot channel, profile files, and calibration
sample files.
"""

from .capture import AdapterConfig, StreamStats, stream
from .codec import Features, complete_blend, encode_frame_line
from .overlay import OverlayScene, layout_overlay, render_text
from .session import CalibrationSession, SessionSpec, write_sample_file
from .tuner import ThresholdTuner, TunerError

__all__ = [
    "AdapterConfig",
    "CalibrationSession",
    "Features",
    "OverlayScene",
    "SessionSpec",
    "StreamStats",
    "ThresholdTuner",
    "TunerError",
    "complete_blend",
    "encode_frame_line",
    "layout_overlay",
    "render_text",
    "stream",
    "write_sample_file",
]

__version__ = "0.1.0"
