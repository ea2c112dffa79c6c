"""Cursor motion, dwell locking, scrolling, and head-held direction keys.

Head pose is normalized to dimensionless deflections ((angle - center) /
scale per axis).  Gaze drives the cursor either absolutely (smoothed gaze
point plus a head fine-tune offset, with dwell locking for stable clicks)
or relatively (edge-band gaze produces continuous directional motion).
Roll past a degree threshold scrolls, and large sustained deflections hold
direction-bound keys with hysteresis.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .frames import HeadPose


@dataclass(frozen=True)
class CursorParams:
    """All gains, bands, and thresholds, in one overridable bundle."""

    smooth_window: int = 5
    fine_gain: float = 10.0
    fine_deadzone: float = 1.0
    fine_release: float = 0.8
    dwell_ms: int = 1000
    dwell_lock_ms: int = 1000
    stillness_eps: float = 3.0
    edge_band: float = 0.10
    rel_gain: float = 8.0
    scroll_threshold_deg: float = 10.0
    scroll_gain: float = 1.0
    head_key_engage: float = 1.0
    head_key_release: float = 0.8
    face_loss_grace_ms: int = 500
    wheel_radius_frac: float = 0.2
    wheel_gaze_min_frac: float = 0.15
    wheel_head_deadzone: float = 1.0

    def validate(self) -> None:
        if self.smooth_window < 1:
            raise ValueError("smooth_window must be >= 1")
        for name in ("dwell_ms", "dwell_lock_ms", "face_loss_grace_ms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 < self.edge_band < 0.5:
            raise ValueError("edge_band must be in (0, 0.5)")
        if self.head_key_release >= self.head_key_engage:
            raise ValueError("head_key_release must be below head_key_engage")
        if self.fine_release >= self.fine_deadzone:
            raise ValueError("fine_release must be below fine_deadzone")


@dataclass(frozen=True)
class HeadDeflection:
    """Normalized head steering signal: (angle - center) / scale per axis.

    Positive yaw is right, positive pitch is up, positive roll is a
    rightward tilt.  `roll_deg` keeps the centered roll in raw degrees for
    the scroll threshold.
    """

    yaw: float
    pitch: float
    roll: float
    roll_deg: float

    @classmethod
    def from_pose(
        cls,
        pose: HeadPose,
        center: tuple[float, float, float],
        scale: tuple[float, float, float],
    ) -> "HeadDeflection":
        roll_deg = pose.roll - center[2]
        return cls(
            yaw=(pose.yaw - center[0]) / scale[0],
            pitch=(pose.pitch - center[1]) / scale[1],
            roll=roll_deg / scale[2],
            roll_deg=roll_deg,
        )


class GazeSmoother:
    """Moving average over the last `window` points; reset on face loss.

    The smoothed point is a convex combination of the stored points, so it
    never leaves their convex hull (no overshoot).
    """

    def __init__(self, window: int):
        self._points: deque[tuple[float, float]] = deque(maxlen=window)

    def push(self, x: float, y: float) -> tuple[float, float]:
        self._points.append((x, y))
        n = len(self._points)
        return (
            sum(p[0] for p in self._points) / n,
            sum(p[1] for p in self._points) / n,
        )

    def reset(self) -> None:
        self._points.clear()


class DwellLock:
    """Suppresses cursor moves until a deadline; clicks always pass."""

    def __init__(self) -> None:
        self.locked_until: int | None = None

    def engage(self, t_ms: int, duration_ms: int) -> None:
        until = t_ms + duration_ms
        if self.locked_until is None or until > self.locked_until:
            self.locked_until = until

    def locked(self, t_ms: int) -> bool:
        if self.locked_until is None:
            return False
        if t_ms >= self.locked_until:
            self.locked_until = None
            return False
        return True

    def remaining(self, t_ms: int) -> int:
        if self.locked_until is None or t_ms >= self.locked_until:
            return 0
        return self.locked_until - t_ms

    def reset(self) -> None:
        self.locked_until = None


class _AxisGate:
    """Deadzone with release hysteresis for one signed axis."""

    def __init__(self, engage: float, release: float):
        self.engage = engage
        self.release = release
        self.active = 0  # -1, 0, +1

    def update(self, value: float) -> int:
        if self.active == 0:
            if value >= self.engage:
                self.active = 1
            elif value <= -self.engage:
                self.active = -1
        elif self.active == 1 and value < self.release:
            self.active = -1 if value <= -self.engage else 0
        elif self.active == -1 and value > -self.release:
            self.active = 1 if value >= self.engage else 0
        return self.active

    def reset(self) -> None:
        self.active = 0


class AbsoluteCursor:
    """Gaze point plus head fine-tune, with stillness-triggered dwell lock.

    Emits a target only when the rounded pixel changes and no lock is held.
    Keeping the would-be target within `stillness_eps` of the last emitted
    position for `dwell_ms` engages the dwell lock for `dwell_lock_ms`.
    """

    def __init__(self, params: CursorParams):
        self.params = params
        self._fine_x = _AxisGate(params.fine_deadzone, params.fine_release)
        self._fine_y = _AxisGate(params.fine_deadzone, params.fine_release)
        self._last_emit: tuple[int, int] | None = None
        self._still_since: int | None = None

    def reset(self) -> None:
        self._fine_x.reset()
        self._fine_y.reset()
        self._last_emit = None
        self._still_since = None

    def update(
        self,
        point: tuple[float, float],
        defl: HeadDeflection,
        dwell: DwellLock,
        t_ms: int,
        screen: tuple[int, int],
    ) -> tuple[int, int] | None:
        px, py = point
        if self._fine_x.update(defl.yaw):
            px += self.params.fine_gain * defl.yaw
        if self._fine_y.update(defl.pitch):
            py -= self.params.fine_gain * defl.pitch
        px = min(max(px, 0.0), screen[0] - 1.0)
        py = min(max(py, 0.0), screen[1] - 1.0)
        target = (int(round(px)), int(round(py)))

        if dwell.locked(t_ms):
            self._still_since = None
            return None

        if self._last_emit is None or (
            math.hypot(px - self._last_emit[0], py - self._last_emit[1])
            >= self.params.stillness_eps
        ):
            self._still_since = t_ms
        elif self._still_since is None:
            self._still_since = t_ms
        elif t_ms - self._still_since >= self.params.dwell_ms:
            dwell.engage(t_ms, self.params.dwell_lock_ms)
            self._still_since = None
            return None

        if target != self._last_emit:
            self._last_emit = target
            return target
        return None


class RelativeCursor:
    """Edge-band gaze produces per-frame motion toward that edge.

    Each axis is independent: penetration depth into its 10% band scales a
    fixed per-frame gain, rounded to whole pixels.  A frame whose rounded
    motion is (0, 0) emits nothing.
    """

    def __init__(self, params: CursorParams):
        self.params = params

    def update(
        self, point: tuple[float, float], screen: tuple[int, int]
    ) -> tuple[int, int] | None:
        dx = self._axis(point[0], screen[0])
        dy = self._axis(point[1], screen[1])
        if dx == 0 and dy == 0:
            return None
        return dx, dy

    def _axis(self, value: float, extent: int) -> int:
        band = self.params.edge_band * extent
        if value < band:
            penetration = (band - value) / band
            return -round(self.params.rel_gain * min(penetration, 1.0))
        if value > extent - band:
            penetration = (value - (extent - band)) / band
            return round(self.params.rel_gain * min(penetration, 1.0))
        return 0


def scroll_direction(defl: HeadDeflection, threshold_deg: float) -> str | None:
    """"left" or "right" when |roll| strictly exceeds the degree threshold."""
    if defl.roll_deg > threshold_deg:
        return "right"
    if defl.roll_deg < -threshold_deg:
        return "left"
    return None


def scroll_magnitude(defl: HeadDeflection, params: CursorParams) -> int:
    """Unsigned per-frame scroll amount, proportional to excess roll."""
    excess = abs(defl.roll_deg) - params.scroll_threshold_deg
    if excess <= 0:
        return 0
    return round(params.scroll_gain * excess)


class HeadKeyGates:
    """Hysteresis gates turning sustained deflections into key hold changes.

    Directions on one axis are mutually exclusive: the gate engages at
    `head_key_engage` and releases below `head_key_release`, so oscillation
    between those never chatters.  update() reports ("down"|"up", direction)
    changes, releases first.
    """

    AXES = (("head_right", "head_left"), ("head_up", "head_down"))

    def __init__(self, params: CursorParams):
        self._yaw = _AxisGate(params.head_key_engage, params.head_key_release)
        self._pitch = _AxisGate(params.head_key_engage, params.head_key_release)

    @property
    def held(self) -> tuple[str, ...]:
        out = []
        for gate, (pos, neg) in ((self._yaw, self.AXES[0]), (self._pitch, self.AXES[1])):
            if gate.active == 1:
                out.append(pos)
            elif gate.active == -1:
                out.append(neg)
        return tuple(out)

    def update(self, defl: HeadDeflection) -> list[tuple[str, str]]:
        before = set(self.held)
        self._yaw.update(defl.yaw)
        self._pitch.update(defl.pitch)
        after = set(self.held)
        changes = [("up", name) for name in sorted(before - after)]
        changes += [("down", name) for name in sorted(after - before)]
        return changes

    def release_all(self) -> list[tuple[str, str]]:
        changes = [("up", name) for name in sorted(self.held)]
        self._yaw.reset()
        self._pitch.reset()
        return changes

    def reset(self) -> None:
        self._yaw.reset()
        self._pitch.reset()
