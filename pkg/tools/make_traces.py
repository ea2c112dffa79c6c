"""Regenerate the committed feature-stream traces (and optionally goldens).

Traces are deterministic scripts of facial activity encoded in the wire
format; goldens are the event logs a correct engine produces for them.
Goldens are frozen by hand-checking their lines — rewrite them only via
--write-goldens after verifying the diff line by line.

Usage:
    python3 tools/make_traces.py [--write-goldens]
"""

from __future__ import annotations

import argparse
import os
import random
import sys

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "src"))

from facepilot.calibration import load_model
from facepilot.engine import replay_trace
from facepilot.frames import (
    BlendShapeVector,
    FaceBox,
    FeatureFrame,
    GazeAngles,
    HeadPose,
    encode_frame,
)
from facepilot.profile import load_profile

TRACE_DIR = os.path.join(ROOT, "traces")
GOLDEN_DIR = os.path.join(ROOT, "goldens")
PROFILE_GAME = os.path.join(ROOT, "profiles", "game.yaml")
MODEL = os.path.join(GOLDEN_DIR, "calibration_model.json")

FRAME_MS = 33  # ~30 Hz
NEUTRAL_PITCH = 3.0


def frame(
    t_ms: int,
    yaw: float = 0.0,
    pitch: float = NEUTRAL_PITCH,
    roll: float = 0.0,
    gaze_yaw: float = 0.0,
    gaze_pitch: float = 0.0,
    **blend: float,
) -> FeatureFrame:
    return FeatureFrame(
        t_ms=t_ms,
        face_present=True,
        blend=BlendShapeVector.zeros(**blend),
        head=HeadPose(yaw=yaw, pitch=pitch, roll=roll),
        gaze=GazeAngles(yaw=gaze_yaw, pitch=gaze_pitch),
        box=FaceBox(0.3, 0.3, 0.7, 0.7),
    )


class Script:
    """Sequential frame builder with a running clock."""

    def __init__(self) -> None:
        self.frames: list[FeatureFrame] = []
        self.t = 0

    def add(self, n: int = 1, **kw) -> "Script":
        for _ in range(n):
            self.frames.append(frame(self.t, **kw))
            self.t += FRAME_MS
        return self


def wheel_pick(script: Script, steer: dict, **intent: float) -> None:
    """Open a wheel (2-frame debounce), steer one frame, release."""
    script.add(2)
    script.add(2, **intent)
    script.add(2, **intent, **steer)
    script.add(2)


def trace_perspective() -> list[FeatureFrame]:
    """Relative-mode panning: gaze visits each screen edge, then the corner."""
    s = Script()
    s.add(5)  # settle at center
    s.add(15, gaze_yaw=-23.0)  # left edge: x = 40
    s.add(5)
    s.add(15, gaze_yaw=23.0)  # right edge: x = 1880
    s.add(5)
    s.add(15, gaze_pitch=15.0)  # top edge: y = 15
    s.add(5)
    s.add(15, gaze_pitch=-14.5)  # bottom edge: y = 1047.5
    s.add(5)
    s.add(12, gaze_yaw=-23.5, gaze_pitch=14.0)  # top-left corner: both axes
    s.add(5)
    return s.frames


def trace_cursor_click() -> list[FeatureFrame]:
    """Mode-switch to absolute, settle on a target, dwell, pucker-click."""
    s = Script()
    # switch game -> type via the mode wheel (steer down = second item)
    wheel_pick(s, {"pitch": -9.0}, jawOpen=0.5)
    # fix gaze on a target: x = 40*5+960 = 1160, y = -35*(-2)+540 = 610
    look = {"gaze_yaw": 5.0, "gaze_pitch": -2.0}
    s.add(36, **look)  # > 1 s still: dwell lock engages
    s.add(2, mouthPucker=0.99, **look)  # click while locked
    s.add(28, **look)  # wait out the induce lock
    s.add(8, gaze_yaw=-6.0, gaze_pitch=4.0)  # new target: x=720, y=400
    s.add(3)
    return s.frames


def trace_direct_triggers() -> list[FeatureFrame]:
    """Hold-style shortcuts: eyebrows for space, mouth roll for e."""
    s = Script()
    s.add(3)
    s.add(4, browInnerUp=0.9)  # space down (frame 2 of the raise)
    s.add(4)  # space up
    s.add(4, mouthRollLower=0.6, mouthRollUpper=0.6)  # e down
    s.add(4)  # e up
    s.add(2, browInnerUp=0.9)  # a second, shorter space tap
    s.add(3)
    return s.frames


def trace_wheel_skill() -> list[FeatureFrame]:
    """The four-skill wheel: open with num4, steer right, confirm "2"."""
    s = Script()
    wheel_pick(s, {"yaw": 12.0}, mouthLeft=0.5)
    s.add(2)
    return s.frames


def trace_eight_for_two() -> list[FeatureFrame]:
    """All eight keys {1,2,3,4} and {q,r,f,t} from just num4 and num6."""
    s = Script()
    steers = (
        {"pitch": 15.0},  # up: item 0
        {"yaw": 12.0},  # right: item 1
        {"pitch": -9.0},  # down: item 2
        {"yaw": -12.0},  # left: item 3
    )
    for steer in steers:
        wheel_pick(s, steer, mouthLeft=0.5)  # num4: 1 2 3 4
    for steer in steers:
        wheel_pick(s, steer, mouthRight=0.5)  # num6: q r f t
    s.add(2)
    return s.frames


def trace_throughput() -> list[FeatureFrame]:
    """900 frames (~30 s) of mixed activity for the latency benchmark."""
    rng = random.Random(424242)
    s = Script()
    while len(s.frames) < 900:
        kind = rng.random()
        if kind < 0.35:
            s.add(
                rng.randint(2, 6),
                gaze_yaw=rng.uniform(-20, 20),
                gaze_pitch=rng.uniform(-12, 12),
            )
        elif kind < 0.55:
            s.add(rng.randint(2, 5), yaw=rng.uniform(-14, 14))
        elif kind < 0.7:
            s.add(rng.randint(2, 5), roll=rng.uniform(-16, 16))
        elif kind < 0.85:
            blend = rng.choice(
                (
                    {"browInnerUp": 0.9},
                    {"mouthRollLower": 0.6, "mouthRollUpper": 0.6},
                    {"mouthLeft": 0.5},
                    {"mouthRight": 0.5},
                )
            )
            s.add(rng.randint(2, 5), **blend)
        else:
            s.add(rng.randint(1, 4))
    return s.frames[:900]


TRACES = {
    "scenario_perspective": trace_perspective,
    "scenario_cursor_click": trace_cursor_click,
    "scenario_direct_triggers": trace_direct_triggers,
    "scenario_wheel_skill": trace_wheel_skill,
    "eight_for_two": trace_eight_for_two,
    "throughput_900": trace_throughput,
}

# throughput is a latency benchmark, not a behavior reference: no golden
GOLDENED = [name for name in TRACES if name != "throughput_900"]


def write_traces() -> None:
    os.makedirs(TRACE_DIR, exist_ok=True)
    for name, build in TRACES.items():
        path = os.path.join(TRACE_DIR, f"{name}.jsonl")
        frames = build()
        with open(path, "w", encoding="utf-8") as fh:
            for f in frames:
                fh.write(encode_frame(f) + "\n")
        print(f"wrote {path} ({len(frames)} frames)")


def write_goldens() -> None:
    profile = load_profile(PROFILE_GAME)
    model = load_model(MODEL)
    for name in GOLDENED:
        with open(os.path.join(TRACE_DIR, f"{name}.jsonl"), encoding="utf-8") as fh:
            log, stats = replay_trace(profile, fh, model=model)
        path = os.path.join(GOLDEN_DIR, f"{name}.log")
        with open(path, "w", encoding="utf-8") as fh:
            for line in log.lines():
                fh.write(line + "\n")
        print(f"wrote {path} ({len(log.lines())} events, {stats.frames} frames)")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--write-goldens",
        action="store_true",
        help="also regenerate golden logs (verify the diff before committing)",
    )
    args = parser.parse_args()
    write_traces()
    if args.write_goldens:
        write_goldens()


if __name__ == "__main__":
    main()
