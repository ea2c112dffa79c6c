"""facepilot: facial feature streams to full computer control.

Webcam-derived signals (blendshapes, head pose, gaze angles) stream in as
newline-delimited frames; configurable facial intentions open selection
wheels, hold keys, click, and scroll, while calibrated gaze moves the
cursor absolutely or relatively.
"""

from .calibration import (
    CalibrationModel,
    CalibrationSample,
    fit_calibration,
    load_model,
    load_samples,
    predict_gaze_point,
    save_model,
    write_samples,
)
from .engine import Engine, EventLog, record_stream, replay_trace
from .frames import (
    BLENDSHAPE_NAMES,
    BlendShapeVector,
    DecodeError,
    FaceBox,
    FeatureFrame,
    GazeAngles,
    HeadPose,
    InputEvent,
    ScreenPoint,
    decode_frame,
    encode_frame,
)
from .profile import ConfigError, Profile, load_profile, save_profile, validate_coverage

__version__ = "0.1.0"

__all__ = [
    "BLENDSHAPE_NAMES",
    "BlendShapeVector",
    "CalibrationModel",
    "CalibrationSample",
    "ConfigError",
    "DecodeError",
    "Engine",
    "EventLog",
    "FaceBox",
    "FeatureFrame",
    "GazeAngles",
    "HeadPose",
    "InputEvent",
    "Profile",
    "ScreenPoint",
    "decode_frame",
    "encode_frame",
    "fit_calibration",
    "load_model",
    "load_profile",
    "load_samples",
    "predict_gaze_point",
    "record_stream",
    "replay_trace",
    "save_model",
    "save_profile",
    "validate_coverage",
    "write_samples",
]
