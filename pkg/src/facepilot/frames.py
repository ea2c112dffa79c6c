"""Core signal types, the newline-delimited frame codec, and input events.

A feature frame is one webcam frame's worth of facial signals: 52 blendshape
activations, head pose angles, gaze angles, and the face bounding box.  Frames
travel between processes as newline-delimited JSON records; this module owns
both directions of that codec and the validation rules applied on decode.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

# Canonical face blendshape names, `_neutral` first then alphabetical.  Wire
# records must carry exactly this set; vectors store values in this order.
BLENDSHAPE_NAMES: tuple[str, ...] = (
    "_neutral",
    "browDownLeft",
    "browDownRight",
    "browInnerUp",
    "browOuterUpLeft",
    "browOuterUpRight",
    "cheekPuff",
    "cheekSquintLeft",
    "cheekSquintRight",
    "eyeBlinkLeft",
    "eyeBlinkRight",
    "eyeLookDownLeft",
    "eyeLookDownRight",
    "eyeLookInLeft",
    "eyeLookInRight",
    "eyeLookOutLeft",
    "eyeLookOutRight",
    "eyeLookUpLeft",
    "eyeLookUpRight",
    "eyeSquintLeft",
    "eyeSquintRight",
    "eyeWideLeft",
    "eyeWideRight",
    "jawForward",
    "jawLeft",
    "jawOpen",
    "jawRight",
    "mouthClose",
    "mouthDimpleLeft",
    "mouthDimpleRight",
    "mouthFrownLeft",
    "mouthFrownRight",
    "mouthFunnel",
    "mouthLeft",
    "mouthLowerDownLeft",
    "mouthLowerDownRight",
    "mouthPressLeft",
    "mouthPressRight",
    "mouthPucker",
    "mouthRight",
    "mouthRollLower",
    "mouthRollUpper",
    "mouthShrugLower",
    "mouthShrugUpper",
    "mouthSmileLeft",
    "mouthSmileRight",
    "mouthStretchLeft",
    "mouthStretchRight",
    "mouthUpperUpLeft",
    "mouthUpperUpRight",
    "noseSneerLeft",
    "noseSneerRight",
)

BLENDSHAPE_INDEX: dict[str, int] = {n: i for i, n in enumerate(BLENDSHAPE_NAMES)}


class DecodeError(ValueError):
    """A frame record failed validation.  `field` names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class BlendShapeVector:
    """Activations for all 52 blendshapes, each in [0, 1], canonical order."""

    values: tuple[float, ...]

    @classmethod
    def zeros(cls, **overrides: float) -> "BlendShapeVector":
        """All-zero vector with named overrides, e.g. zeros(jawOpen=0.5)."""
        vals = [0.0] * len(BLENDSHAPE_NAMES)
        for name, value in overrides.items():
            vals[BLENDSHAPE_INDEX[name]] = float(value)
        return cls(tuple(vals))

    @classmethod
    def from_mapping(cls, mapping: dict[str, float]) -> "BlendShapeVector":
        missing = [n for n in BLENDSHAPE_NAMES if n not in mapping]
        if missing:
            raise DecodeError("blend", f"missing blendshapes: {missing[:3]}")
        extra = [n for n in mapping if n not in BLENDSHAPE_INDEX]
        if extra:
            raise DecodeError("blend", f"unknown blendshapes: {extra[:3]}")
        vals = []
        for name in BLENDSHAPE_NAMES:
            v = mapping[name]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise DecodeError("blend", f"{name} is not a number")
            v = float(v)
            if not math.isfinite(v) or not 0.0 <= v <= 1.0:
                raise DecodeError("blend", f"{name}={v} outside [0, 1]")
            vals.append(v)
        return cls(tuple(vals))

    def __getitem__(self, name: str) -> float:
        return self.values[BLENDSHAPE_INDEX[name]]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(BLENDSHAPE_NAMES, self.values))


@dataclass(frozen=True)
class HeadPose:
    """Head rotation in degrees: yaw (+right), pitch (+up), roll (+right tilt)."""

    yaw: float
    pitch: float
    roll: float


@dataclass(frozen=True)
class GazeAngles:
    """Eye gaze direction in degrees: yaw (+right), pitch (+up)."""

    yaw: float
    pitch: float


@dataclass(frozen=True)
class FaceBox:
    """Face bounding box in normalized image coordinates, 0 <= x0 < x1 <= 1."""

    x0: float
    y0: float
    x1: float
    y1: float


@dataclass(frozen=True)
class ScreenPoint:
    """A pixel position on a screen of known size."""

    x: float
    y: float
    screen_w: int
    screen_h: int


@dataclass(frozen=True)
class FeatureFrame:
    """One frame of facial signals.  Signal fields are None when no face."""

    t_ms: int
    face_present: bool
    blend: BlendShapeVector | None = None
    head: HeadPose | None = None
    gaze: GazeAngles | None = None
    box: FaceBox | None = None


@dataclass(frozen=True)
class InputEvent:
    """One control action: key, mouse, or scroll, stamped with frame time.

    Kinds and payload fields:
      key_down / key_up / key_press   {"key": str}
      mouse_move_abs                  {"x": int, "y": int}
      mouse_move_rel                  {"dx": int, "dy": int}
      mouse_click                     {"button": "left"|"middle"|"right"}
      scroll                          {"amount": int}, positive scrolls up
    """

    t_ms: int
    kind: str
    payload: dict

    def to_line(self) -> str:
        body = json.dumps(self.payload, sort_keys=True, separators=(",", ":"))
        return f"{self.t_ms}\t{self.kind}\t{body}"


def key_down(t_ms: int, key: str) -> InputEvent:
    return InputEvent(t_ms, "key_down", {"key": key})


def key_up(t_ms: int, key: str) -> InputEvent:
    return InputEvent(t_ms, "key_up", {"key": key})


def key_press(t_ms: int, key: str) -> InputEvent:
    return InputEvent(t_ms, "key_press", {"key": key})


def mouse_move_abs(t_ms: int, x: int, y: int) -> InputEvent:
    return InputEvent(t_ms, "mouse_move_abs", {"x": int(x), "y": int(y)})


def mouse_move_rel(t_ms: int, dx: int, dy: int) -> InputEvent:
    return InputEvent(t_ms, "mouse_move_rel", {"dx": int(dx), "dy": int(dy)})


def mouse_click(t_ms: int, button: str) -> InputEvent:
    return InputEvent(t_ms, "mouse_click", {"button": button})


def scroll(t_ms: int, amount: int) -> InputEvent:
    return InputEvent(t_ms, "scroll", {"amount": int(amount)})


def _signed_angle(field: str, value: object, limit: float = 180.0) -> float:
    """Validate an angle and normalize [0, 360) encodings to signed degrees.

    Accepts [-limit, 360); values >= limit wrap by -360.  The result is
    always in [-limit, limit).
    """
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DecodeError(field, "not a number")
    v = float(value)
    if not math.isfinite(v):
        raise DecodeError(field, "not finite")
    if v >= 360.0 or v < -limit:
        raise DecodeError(field, f"{v} outside [{-limit}, 360)")
    if v >= limit:
        v -= 360.0
    return v


def _pose_angle(field: str, value: object) -> float:
    """Head pose angle: accepts [-90, 90] or the [270, 360) wrapped form."""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DecodeError(field, "not a number")
    v = float(value)
    if not math.isfinite(v):
        raise DecodeError(field, "not finite")
    if 270.0 <= v < 360.0:
        v -= 360.0
    if not -90.0 <= v <= 90.0:
        raise DecodeError(field, f"{v} outside [-90, 90]")
    return v


def _unit(field: str, value: object) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DecodeError(field, "not a number")
    v = float(value)
    if not math.isfinite(v) or not 0.0 <= v <= 1.0:
        raise DecodeError(field, f"{v} outside [0, 1]")
    return v


def encode_frame(frame: FeatureFrame) -> str:
    """Serialize a frame to one compact JSON line (no trailing newline).

    Floats are emitted at full precision so decode(encode(f)) == f exactly.
    """
    record: dict = {"t_ms": frame.t_ms, "face_present": frame.face_present}
    if frame.face_present:
        record["blend"] = frame.blend.as_dict()
        record["head"] = {
            "yaw": frame.head.yaw,
            "pitch": frame.head.pitch,
            "roll": frame.head.roll,
        }
        record["gaze"] = {"yaw": frame.gaze.yaw, "pitch": frame.gaze.pitch}
        record["box"] = {
            "x0": frame.box.x0,
            "y0": frame.box.y0,
            "x1": frame.box.x1,
            "y1": frame.box.y1,
        }
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def decode_frame(line: str) -> FeatureFrame:
    """Parse and validate one frame record.  Raises DecodeError on bad input.

    Gaze angles arriving in the [0, 360) convention are normalized to signed
    degrees (theta >= 180 becomes theta - 360); head pose likewise accepts
    the [270, 360) wrap of small negative angles.
    """
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DecodeError("record", f"invalid JSON: {exc}") from None
    if not isinstance(record, dict):
        raise DecodeError("record", "not a JSON object")

    if "t_ms" not in record:
        raise DecodeError("t_ms", "missing")
    t_ms = record["t_ms"]
    if isinstance(t_ms, bool) or not isinstance(t_ms, int):
        raise DecodeError("t_ms", "not an integer")

    if "face_present" not in record:
        raise DecodeError("face_present", "missing")
    face_present = record["face_present"]
    if not isinstance(face_present, bool):
        raise DecodeError("face_present", "not a boolean")

    if not face_present:
        return FeatureFrame(t_ms=t_ms, face_present=False)

    for field in ("blend", "head", "gaze", "box"):
        if field not in record or not isinstance(record[field], dict):
            raise DecodeError(field, "missing or not an object")

    blend = BlendShapeVector.from_mapping(record["blend"])

    head_rec = record["head"]
    for k in ("yaw", "pitch", "roll"):
        if k not in head_rec:
            raise DecodeError(f"head.{k}", "missing")
    head = HeadPose(
        yaw=_pose_angle("head.yaw", head_rec["yaw"]),
        pitch=_pose_angle("head.pitch", head_rec["pitch"]),
        roll=_pose_angle("head.roll", head_rec["roll"]),
    )

    gaze_rec = record["gaze"]
    for k in ("yaw", "pitch"):
        if k not in gaze_rec:
            raise DecodeError(f"gaze.{k}", "missing")
    gaze = GazeAngles(
        yaw=_signed_angle("gaze.yaw", gaze_rec["yaw"]),
        pitch=_signed_angle("gaze.pitch", gaze_rec["pitch"]),
    )

    box_rec = record["box"]
    for k in ("x0", "y0", "x1", "y1"):
        if k not in box_rec:
            raise DecodeError(f"box.{k}", "missing")
    box = FaceBox(
        x0=_unit("box.x0", box_rec["x0"]),
        y0=_unit("box.y0", box_rec["y0"]),
        x1=_unit("box.x1", box_rec["x1"]),
        y1=_unit("box.y1", box_rec["y1"]),
    )
    if not (box.x0 < box.x1 and box.y0 < box.y1):
        raise DecodeError("box", "degenerate box (x0 >= x1 or y0 >= y1)")

    return FeatureFrame(
        t_ms=t_ms, face_present=True, blend=blend, head=head, gaze=gaze, box=box
    )


def read_frames(lines) -> list[FeatureFrame]:
    """Decode an iterable of lines, skipping blanks."""
    frames = []
    for line in lines:
        line = line.strip()
        if line:
            frames.append(decode_frame(line))
    return frames
