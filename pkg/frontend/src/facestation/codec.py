"""Capture-side encoder for the newline-delimited feature-frame records.

The control engine decodes one JSON object per line; this module is the
capture station's own implementation of that record layout, kept
independent of the engine package so that conformance is a real
cross-component property.  A committed 50-frame fixture pins the byte
format: every line this encoder emits must parse through the engine's
decoder and re-serialize to the identical bytes.

Canonical form: keys sorted, compact separators, `t_ms` an integer,
every other numeric field a JSON float.  A frame with a detected face
carries `blend` (all 52 canonical blendshape names, values in [0, 1]),
`head` (yaw/pitch/roll degrees), `gaze` (yaw/pitch degrees), and `box`
(normalized image coordinates, x0 < x1, y0 < y1).  A frame without a
face carries only `t_ms` and `face_present: false`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

# The 52 face blendshape channels, `_neutral` first then alphabetical.
# This ordering and naming is part of the wire contract with the engine.
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

BLENDSHAPE_SET = frozenset(BLENDSHAPE_NAMES)


class EncodeError(ValueError):
    """Features failed validation before encoding."""


def complete_blend(partial: dict[str, float] | None = None) -> dict[str, float]:
    """A full 52-channel blend mapping: zeros overridden by `partial`."""
    blend = {name: 0.0 for name in BLENDSHAPE_NAMES}
    if partial:
        unknown = sorted(set(partial) - BLENDSHAPE_SET)
        if unknown:
            raise EncodeError(f"unknown blendshapes: {unknown[:3]}")
        for name, value in partial.items():
            blend[name] = float(value)
    return blend


@dataclass(frozen=True)
class Features:
    """One detected face's worth of signals, ready for the wire.

    `blend` must cover all 52 canonical names.  Angles are signed degrees
    (head within +/-90, gaze within +/-180); the box is in normalized
    image coordinates with positive area.
    """

    blend: dict[str, float]
    head_yaw: float
    head_pitch: float
    head_roll: float
    gaze_yaw: float
    gaze_pitch: float
    box: tuple[float, float, float, float] = field(default=(0.3, 0.3, 0.7, 0.7))

    def validate(self) -> None:
        missing = sorted(BLENDSHAPE_SET - set(self.blend))
        if missing:
            raise EncodeError(f"missing blendshapes: {missing[:3]}")
        extra = sorted(set(self.blend) - BLENDSHAPE_SET)
        if extra:
            raise EncodeError(f"unknown blendshapes: {extra[:3]}")
        for name, value in self.blend.items():
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise EncodeError(f"blend {name}={value} outside [0, 1]")
        for label, angle, limit in (
            ("head_yaw", self.head_yaw, 90.0),
            ("head_pitch", self.head_pitch, 90.0),
            ("head_roll", self.head_roll, 90.0),
            ("gaze_yaw", self.gaze_yaw, 180.0),
            ("gaze_pitch", self.gaze_pitch, 180.0),
        ):
            if not math.isfinite(angle) or not -limit <= angle <= limit:
                raise EncodeError(f"{label}={angle} outside [-{limit}, {limit}]")
        x0, y0, x1, y1 = self.box
        for label, value in zip(("x0", "y0", "x1", "y1"), self.box):
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise EncodeError(f"box {label}={value} outside [0, 1]")
        if not (x0 < x1 and y0 < y1):
            raise EncodeError(f"degenerate box {self.box}")


def encode_present(t_ms: int, features: Features) -> str:
    """One face-present record as a single line (no trailing newline)."""
    features.validate()
    x0, y0, x1, y1 = features.box
    record = {
        "t_ms": int(t_ms),
        "face_present": True,
        "blend": {name: float(features.blend[name]) for name in BLENDSHAPE_NAMES},
        "head": {
            "yaw": float(features.head_yaw),
            "pitch": float(features.head_pitch),
            "roll": float(features.head_roll),
        },
        "gaze": {"yaw": float(features.gaze_yaw), "pitch": float(features.gaze_pitch)},
        "box": {"x0": float(x0), "y0": float(y0), "x1": float(x1), "y1": float(y1)},
    }
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def encode_absent(t_ms: int) -> str:
    """One no-face record: timestamp only, signals omitted."""
    return json.dumps(
        {"t_ms": int(t_ms), "face_present": False},
        sort_keys=True,
        separators=(",", ":"),
    )


def encode_frame_line(t_ms: int, features: Features | None) -> str:
    """Encode either kind of frame; None means no face was detected."""
    if features is None:
        return encode_absent(t_ms)
    return encode_present(t_ms, features)


def parse_record(line: str) -> tuple[int, Features | None]:
    """Parse one frame line back into (t_ms, Features | None).

    The station needs this to consume recorded streams (calibration from a
    trace, overlay previews); strictness lives in the engine's decoder, so
    this parser only requires the fields the station itself uses.
    """
    record = json.loads(line)
    if not isinstance(record, dict) or "t_ms" not in record:
        raise EncodeError("not a frame record")
    t_ms = int(record["t_ms"])
    if not record.get("face_present", False):
        return t_ms, None
    head = record["head"]
    gaze = record["gaze"]
    box = record["box"]
    features = Features(
        blend={name: float(v) for name, v in record["blend"].items()},
        head_yaw=float(head["yaw"]),
        head_pitch=float(head["pitch"]),
        head_roll=float(head["roll"]),
        gaze_yaw=float(gaze["yaw"]),
        gaze_pitch=float(gaze["pitch"]),
        box=(
            float(box["x0"]),
            float(box["y0"]),
            float(box["x1"]),
            float(box["y1"]),
        ),
    )
    features.validate()
    return t_ms, features
