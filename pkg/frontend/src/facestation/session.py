"""Guided calibration session: targets on screen, samples on disk.

The session walks a 3x3 target grid, and at each target prompts three
head poses, for 27 samples total.  Per step it discards a settle period
(the eye needs a moment to land on the target), then averages a fixed
number of face frames into one sample.  Losing the face mid-step restarts
that step.  The output file is the engine's calibration sample format —
one JSON record per line plus a completion trailer — written atomically
(temp file, then rename) so a crash never leaves a half-written file that
looks complete.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .codec import Features

POSE_PROMPTS = ("face the screen square-on", "turn your head left", "turn your head right")


@dataclass(frozen=True)
class SessionSpec:
    """Protocol constants for one calibration run."""

    screen_w: int = 1920
    screen_h: int = 1080
    grid_cols: int = 3
    grid_rows: int = 3
    margin: float = 0.1  # fraction of each screen dimension kept clear
    pose_prompts: tuple[str, ...] = POSE_PROMPTS
    settle_ms: int = 500
    frames_per_sample: int = 15

    def validate(self) -> None:
        if self.grid_cols < 1 or self.grid_rows < 1:
            raise ValueError("grid must be at least 1x1")
        if not 0.0 <= self.margin < 0.5:
            raise ValueError(f"margin {self.margin} outside [0, 0.5)")
        if self.frames_per_sample < 1:
            raise ValueError("frames_per_sample must be >= 1")
        if self.settle_ms < 0:
            raise ValueError("settle_ms must be >= 0")
        if not self.pose_prompts:
            raise ValueError("need at least one pose prompt")


def target_points(spec: SessionSpec) -> list[tuple[float, float]]:
    """Grid targets in pixels, row-major from the top-left."""
    spec.validate()
    xs = _axis_positions(spec.screen_w, spec.grid_cols, spec.margin)
    ys = _axis_positions(spec.screen_h, spec.grid_rows, spec.margin)
    return [(x, y) for y in ys for x in xs]


def _axis_positions(extent: int, count: int, margin: float) -> list[float]:
    lo = extent * margin
    hi = extent * (1.0 - margin)
    if count == 1:
        return [(lo + hi) / 2.0]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


@dataclass(frozen=True)
class SessionStep:
    """One (target, head pose) combination awaiting its sample."""

    index: int
    target: tuple[float, float]
    target_index: int
    prompt: str

    def describe(self, total: int) -> str:
        x, y = self.target
        return (
            f"[{self.index + 1}/{total}] look at ({x:.0f}, {y:.0f}) - {self.prompt}"
        )


@dataclass(frozen=True)
class SampleRecord:
    """Averaged signals for one step, in the engine's sample-file fields."""

    gaze_yaw: float
    gaze_pitch: float
    box: tuple[float, float, float, float]
    target: tuple[float, float]
    screen_w: int
    screen_h: int

    def to_json_record(self) -> dict:
        return {
            "kind": "sample",
            "gaze": {"yaw": self.gaze_yaw, "pitch": self.gaze_pitch},
            "box": {
                "x0": self.box[0],
                "y0": self.box[1],
                "x1": self.box[2],
                "y1": self.box[3],
            },
            "target": {
                "x": self.target[0],
                "y": self.target[1],
                "screen_w": self.screen_w,
                "screen_h": self.screen_h,
            },
        }


class CalibrationSession:
    """Feed frames in, collect one averaged sample per step.

    `feed` returns a small status string for UI display: "settling",
    "collecting", "sample" (a step just completed), "retry" (face lost,
    step restarted), or "done".
    """

    def __init__(self, spec: SessionSpec | None = None):
        self.spec = spec or SessionSpec()
        self.spec.validate()
        targets = target_points(self.spec)
        self.steps: list[SessionStep] = []
        for t_index, target in enumerate(targets):
            for prompt in self.spec.pose_prompts:
                self.steps.append(
                    SessionStep(
                        index=len(self.steps),
                        target=target,
                        target_index=t_index,
                        prompt=prompt,
                    )
                )
        self.samples: list[SampleRecord] = []
        self.retries = 0
        self._step_index = 0
        self._settle_start_ms: int | None = None
        self._collected: list[Features] = []

    @property
    def done(self) -> bool:
        return self._step_index >= len(self.steps)

    def current(self) -> SessionStep | None:
        return None if self.done else self.steps[self._step_index]

    def progress(self) -> tuple[int, int]:
        return len(self.samples), len(self.steps)

    def feed(self, t_ms: int, features: Features | None) -> str:
        if self.done:
            return "done"
        if features is None:
            # Face lost: restart this step from its settle period.
            if self._settle_start_ms is not None or self._collected:
                self.retries += 1
            self._settle_start_ms = None
            self._collected = []
            return "retry"
        if self._settle_start_ms is None:
            self._settle_start_ms = t_ms
        if t_ms - self._settle_start_ms < self.spec.settle_ms:
            return "settling"
        self._collected.append(features)
        if len(self._collected) < self.spec.frames_per_sample:
            return "collecting"
        self._finish_step()
        return "done" if self.done else "sample"

    def _finish_step(self) -> None:
        step = self.steps[self._step_index]
        n = len(self._collected)
        mean = lambda values: sum(values) / n
        self.samples.append(
            SampleRecord(
                gaze_yaw=mean([f.gaze_yaw for f in self._collected]),
                gaze_pitch=mean([f.gaze_pitch for f in self._collected]),
                box=(
                    mean([f.box[0] for f in self._collected]),
                    mean([f.box[1] for f in self._collected]),
                    mean([f.box[2] for f in self._collected]),
                    mean([f.box[3] for f in self._collected]),
                ),
                target=step.target,
                screen_w=self.spec.screen_w,
                screen_h=self.spec.screen_h,
            )
        )
        self._step_index += 1
        self._settle_start_ms = None
        self._collected = []


def write_sample_file(
    samples: list[SampleRecord], path: str, complete: bool = True
) -> None:
    """Write samples plus the completion trailer, atomically.

    The engine refuses files whose trailer is missing, aborted, or
    disagrees with the line count, so an interrupted session can never be
    mistaken for a finished one.
    """
    lines = [
        json.dumps(s.to_json_record(), sort_keys=True, separators=(",", ":"))
        for s in samples
    ]
    trailer = {"kind": "complete" if complete else "aborted", "count": len(samples)}
    lines.append(json.dumps(trailer, sort_keys=True, separators=(",", ":")))
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def run_session(
    spec: SessionSpec,
    feed,
    out_path: str,
    on_prompt=None,
) -> int:
    """Drive a session from an iterable of (t_ms, Features | None) pairs.

    Returns the number of samples written.  If the feed ends early the
    partial file is written with an aborted trailer, which the engine's
    fit command refuses.
    """
    session = CalibrationSession(spec)
    last_step = None
    for t_ms, features in feed:
        step = session.current()
        if on_prompt is not None and step is not None and step != last_step:
            on_prompt(step.describe(len(session.steps)))
            last_step = step
        session.feed(t_ms, features)
        if session.done:
            break
    write_sample_file(session.samples, out_path, complete=session.done)
    return len(session.samples)


def simulated_user_feed(
    spec: SessionSpec, seed: int = 0, frame_ms: int = 33
) -> "list[tuple[int, Features]]":
    """A compliant pretend user for demos: stares where asked, jitters a bit.

    Gaze angles follow a fixed linear map from the target position plus
    small Gaussian noise, so a model fitted from the resulting samples is
    well-conditioned.
    """
    import random

    from .codec import complete_blend

    rng = random.Random(seed)
    session = CalibrationSession(spec)
    feed: list[tuple[int, Features]] = []
    t_ms = 0
    while not session.done:
        step = session.current()
        x, y = step.target
        yaw = (x / spec.screen_w - 0.5) * 36.0 + rng.gauss(0.0, 0.3)
        pitch = -(y / spec.screen_h - 0.5) * 24.0 + rng.gauss(0.0, 0.3)
        shift = {"face the screen square-on": 0.0}.get(step.prompt, 0.02)
        if "left" in step.prompt:
            shift = -abs(shift)
        cx = 0.5 + shift + rng.gauss(0.0, 0.002)
        features = Features(
            blend=complete_blend({"eyeBlinkLeft": abs(rng.gauss(0.05, 0.01))}),
            head_yaw=shift * 100.0,
            head_pitch=3.0,
            head_roll=0.0,
            gaze_yaw=yaw,
            gaze_pitch=pitch,
            box=(cx - 0.2, 0.3, cx + 0.2, 0.7),
        )
        feed.append((t_ms, features))
        session.feed(t_ms, features)
        t_ms += frame_ms
    return feed
