"""The per-frame control engine: feature frames in, input events out.

Each frame runs a fixed pipeline: expression evaluation with priority rules
and debounce, wheel open/confirm edges, single-item hold bindings,
head-direction keys, scroll, then cursor motion in the active mode.  The
engine is a pure function of (profile, model, frame stream): it reads only
frame timestamps, never the wall clock, so a recorded trace replays to a
byte-identical event log.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .calibration import CalibrationModel, predict_gaze_point
from .cursor import (
    AbsoluteCursor,
    DwellLock,
    GazeSmoother,
    HeadDeflection,
    HeadKeyGates,
    RelativeCursor,
    scroll_direction,
    scroll_magnitude,
)
from .expressions import IntentionEngine
from .frames import (
    DecodeError,
    FeatureFrame,
    InputEvent,
    decode_frame,
    key_down,
    key_press,
    key_up,
    mouse_click,
    mouse_move_abs,
    mouse_move_rel,
    scroll,
)
from .profile import HEAD_DIRECTIONS, Profile, classify_token
from .wheel import SQUARE, WheelAction, WheelMachine, direction_to_index, point_to_index

DEFAULT_SCREEN = (1920, 1080)


@dataclass
class EventLog:
    """Append-only event record; diagnostics ride along with kind "diag"."""

    entries: list[InputEvent] = field(default_factory=list)

    def append(self, event: InputEvent) -> None:
        self.entries.append(event)

    def lines(self) -> list[str]:
        return [e.to_line() for e in self.entries]

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.lines():
                fh.write(line + "\n")

    def input_events(self) -> list[InputEvent]:
        return [e for e in self.entries if e.kind != "diag"]


class _HeldKeys:
    """Reference-counted key holds so overlapping sources never double-emit."""

    def __init__(self) -> None:
        self._counts: dict[str, int] = {}

    def down(self, key: str) -> bool:
        """True when this transition actually presses the key (0 -> 1)."""
        self._counts[key] = self._counts.get(key, 0) + 1
        return self._counts[key] == 1

    def up(self, key: str) -> bool:
        """True when this transition actually releases the key (1 -> 0)."""
        if self._counts.get(key, 0) == 0:
            return False
        self._counts[key] -= 1
        if self._counts[key] == 0:
            del self._counts[key]
            return True
        return False

    def held(self) -> tuple[str, ...]:
        return tuple(self._counts)

    def clear(self) -> None:
        self._counts.clear()


class Engine:
    """Owns all per-session state; advance it one frame at a time via step().

    Events are appended to `log` and forwarded to `sink` (diagnostics stay
    log-only).  finish() must run at end of stream: it releases every held
    key and closes any open wheel so a session can never end with stuck
    input state.
    """

    def __init__(
        self,
        profile: Profile,
        screen: tuple[int, int] = DEFAULT_SCREEN,
        model: CalibrationModel | None = None,
        sink=None,
    ):
        self.profile = profile
        self.screen = screen
        self.model = model
        self.sink = sink
        self.log = EventLog()
        self.mode = profile.initial_mode
        self.intents = IntentionEngine(
            profile.intentions, profile.rules, profile.debounce_frames
        )
        self.wheel = WheelMachine()
        self.smoother = GazeSmoother(profile.cursor.smooth_window)
        self.dwell = DwellLock()
        self.abs_cursor = AbsoluteCursor(profile.cursor)
        self.rel_cursor = RelativeCursor(profile.cursor)
        self.head_keys = HeadKeyGates(profile.cursor)
        self.held = _HeldKeys()
        self.single_holds: dict[str, str] = {}
        self.last_t: int | None = None
        self.frame_count = 0
        self._face_lost_at: int | None = None
        self._face_lost_handled = False
        self._last_cursor: tuple[int, int] | None = None

    # -- event plumbing ----------------------------------------------------

    def _emit(self, event: InputEvent) -> None:
        self.log.append(event)
        if self.sink is not None:
            self.sink.emit(event)

    def _diag(self, t_ms: int, msg: str) -> None:
        self.log.append(InputEvent(t_ms, "diag", {"msg": msg}))

    # -- token translation ---------------------------------------------------

    def _press_token(self, token: str | None, t_ms: int) -> None:
        """Tap semantics: wheel confirms and chord items."""
        cls = classify_token(token, frozenset(self.profile.mode_order))
        if cls in ("null", "meta"):
            return
        if cls == "mode":
            self._switch_mode(token, t_ms)
        elif cls == "mouse":
            self._emit(mouse_click(t_ms, token.removeprefix("mouse_")))
        elif cls == "scroll":
            self._emit(scroll(t_ms, 1 if token == "scroll_up" else -1))
        elif cls == "chord":
            parts = token.split("+")
            for part in parts[:-1]:
                if self.held.down(part):
                    self._emit(key_down(t_ms, part))
            self._emit(key_press(t_ms, parts[-1]))
            for part in reversed(parts[:-1]):
                if self.held.up(part):
                    self._emit(key_up(t_ms, part))
        else:
            self._emit(key_press(t_ms, token))

    def _hold_token_down(self, token: str | None, t_ms: int) -> None:
        cls = classify_token(token, frozenset(self.profile.mode_order))
        if cls in ("null", "meta"):
            return
        if cls == "mode":
            self._switch_mode(token, t_ms)
        elif cls == "mouse":
            self._emit(mouse_click(t_ms, token.removeprefix("mouse_")))
        elif cls == "scroll":
            self._emit(scroll(t_ms, 1 if token == "scroll_up" else -1))
        elif cls == "chord":
            for part in token.split("+"):
                if self.held.down(part):
                    self._emit(key_down(t_ms, part))
        else:
            if self.held.down(token):
                self._emit(key_down(t_ms, token))

    def _hold_token_up(self, token: str | None, t_ms: int) -> None:
        cls = classify_token(token, frozenset(self.profile.mode_order))
        if cls == "chord":
            for part in reversed(token.split("+")):
                if self.held.up(part):
                    self._emit(key_up(t_ms, part))
        elif cls == "key":
            if self.held.up(token):
                self._emit(key_up(t_ms, token))
        # mouse/scroll/mode/null/meta holds have no release action

    # -- state transitions ---------------------------------------------------

    def _switch_mode(self, target: str, t_ms: int) -> None:
        """Swap the keymap; everything stateful resets to idle first."""
        if target == self.mode:
            return
        self._release_everything(t_ms)
        self.intents.reset()
        self.smoother.reset()
        self.abs_cursor.reset()
        self.dwell.reset()
        self.mode = target

    def _release_everything(self, t_ms: int) -> None:
        self.wheel.cancel()
        self.single_holds.clear()
        self.head_keys.reset()
        for key in self.held.held():
            self._emit(key_up(t_ms, key))
        self.held.clear()

    def _apply_wheel_action(self, action: WheelAction, t_ms: int) -> None:
        if action.kind == "open":
            # The head now steers the wheel highlight, so direction keys let go.
            for change, direction in self.head_keys.release_all():
                self._head_key_event(change, direction, t_ms)
            return
        if action.kind == "cancel":
            return
        if action.kind == "confirm":
            self._press_token(action.token, t_ms)
            if action.induce_lock_ms:
                self.dwell.engage(t_ms, action.induce_lock_ms)
            return
        if action.kind == "hold_down":
            self.single_holds[action.owner] = action.token
            self._hold_token_down(action.token, t_ms)
            if action.induce_lock_ms:
                self.dwell.engage(t_ms, action.induce_lock_ms)
            return
        if action.kind == "hold_up":
            token = self.single_holds.pop(action.owner, action.token)
            self._hold_token_up(token, t_ms)

    def _head_key_event(self, change: str, direction: str, t_ms: int) -> None:
        spec = self.profile.keymaps[self.mode].get(direction)
        if spec is None or spec.items[0] is None:
            return
        key = spec.items[0]
        if change == "down":
            if self.held.down(key):
                self._emit(key_down(t_ms, key))
        else:
            if self.held.up(key):
                self._emit(key_up(t_ms, key))

    def _update_highlight(
        self, point: tuple[float, float] | None, defl: HeadDeflection
    ) -> None:
        geo = self.wheel.geometry
        params = self.profile.cursor
        if geo.kind == SQUARE:
            if point is None:
                return
            u = point[0] / (self.screen[0] - 1)
            v = point[1] / (self.screen[1] - 1)
            self.wheel.update_highlight(point_to_index(geo, u, v))
            return
        index = None
        if point is not None:
            cx, cy = self.screen[0] / 2.0, self.screen[1] / 2.0
            dx, dy = point[0] - cx, cy - point[1]
            radius = params.wheel_radius_frac * min(self.screen)
            r = math.hypot(dx, dy)
            if params.wheel_gaze_min_frac * radius <= r <= radius:
                index = direction_to_index(geo, dx, dy)
        if index is None:
            if math.hypot(defl.yaw, defl.pitch) >= params.wheel_head_deadzone:
                index = direction_to_index(geo, defl.yaw, defl.pitch)
        self.wheel.update_highlight(index)

    def _on_face_absent(self, t_ms: int) -> None:
        if self._face_lost_at is None:
            self._face_lost_at = t_ms
            self._face_lost_handled = False
        grace = self.profile.cursor.face_loss_grace_ms
        if not self._face_lost_handled and t_ms - self._face_lost_at >= grace:
            self._diag(t_ms, f"face lost for {t_ms - self._face_lost_at} ms; releasing")
            self._release_everything(t_ms)
            self.intents.reset()
            self.abs_cursor.reset()
            self.dwell.reset()
            self._face_lost_handled = True

    # -- the pipeline --------------------------------------------------------

    def step(self, frame: FeatureFrame) -> list[InputEvent]:
        """Advance one frame; returns the events this frame produced."""
        start = len(self.log.entries)
        t = frame.t_ms
        if self.last_t is not None and t < self.last_t:
            self._diag(
                self.last_t, f"t_ms regression ({t} after {self.last_t}); frame skipped"
            )
            return []
        self.last_t = t
        self.frame_count += 1

        if not frame.face_present:
            self._on_face_absent(t)
            return [e for e in self.log.entries[start:] if e.kind != "diag"]

        if self._face_lost_at is not None:
            self.smoother.reset()
            self._face_lost_at = None
            self._face_lost_handled = False

        defl = HeadDeflection.from_pose(
            frame.head, self.profile.head_center, self.profile.head_scale
        )
        bindings = self.profile.keymaps[self.mode]

        edges = self.intents.step(frame.blend)
        for action in self.wheel.on_edges(edges.risen, edges.fallen, bindings, t):
            self._apply_wheel_action(action, t)

        if not self.wheel.is_open:
            for change, direction in self.head_keys.update(defl):
                self._head_key_event(change, direction, t)

        direction = scroll_direction(defl, self.profile.cursor.scroll_threshold_deg)
        if direction is not None:
            owner = "head_roll_left" if direction == "left" else "head_roll_right"
            spec = self.profile.keymaps[self.mode].get(owner)
            amount = scroll_magnitude(defl, self.profile.cursor)
            if spec is not None and amount != 0:
                signed = amount if spec.items[0] == "scroll_up" else -amount
                self._emit(scroll(t, signed))

        point = None
        if self.model is not None:
            pred = predict_gaze_point(
                self.model, frame.gaze, frame.box, self.screen[0], self.screen[1]
            )
            point = self.smoother.push(pred.x, pred.y)

        if self.wheel.is_open:
            self._update_highlight(point, defl)

        if point is not None:
            if self.profile.cursor_mode(self.mode) == "absolute":
                target = self.abs_cursor.update(
                    point, defl, self.dwell, t, self.screen
                )
                if target is not None:
                    self._last_cursor = target
                    self._emit(mouse_move_abs(t, *target))
            else:
                if not self.dwell.locked(t):
                    rel = self.rel_cursor.update(point, self.screen)
                    if rel is not None:
                        self._emit(mouse_move_rel(t, *rel))

        return [e for e in self.log.entries[start:] if e.kind != "diag"]

    def finish(self, t_ms: int | None = None) -> list[InputEvent]:
        """End of stream: release every held key, close any open wheel."""
        t = t_ms if t_ms is not None else (self.last_t or 0)
        start = len(self.log.entries)
        self._release_everything(t)
        return [e for e in self.log.entries[start:] if e.kind != "diag"]

    def snapshot(self) -> dict:
        """Read-only per-frame view for the overlay UI channel."""
        t = self.last_t or 0
        return {
            "t_ms": t,
            "mode": self.mode,
            "cursor_mode": self.profile.cursor_mode(self.mode),
            "active": sorted(self.intents.active),
            "held": list(self.held.held()),
            "wheel": self.wheel.snapshot(),
            "cursor": list(self._last_cursor) if self._last_cursor else None,
            "dwell_remaining_ms": self.dwell.remaining(t),
        }


@dataclass(frozen=True)
class ReplayStats:
    frames: int
    decode_errors: int
    mean_step_seconds: float


def replay_trace(
    profile: Profile,
    lines,
    model: CalibrationModel | None = None,
    screen: tuple[int, int] = DEFAULT_SCREEN,
    speed: str = "max",
    sink=None,
    snapshot_hook=None,
) -> tuple[EventLog, ReplayStats]:
    """Run a recorded trace through a fresh engine.

    Corrupt lines become diagnostics and are skipped; surrounding frames are
    unaffected.  speed="realtime" paces by t_ms deltas, "max" runs
    back-to-back.  The engine finishes (releasing held keys) at end of
    stream.
    """
    engine = Engine(profile, screen=screen, model=model, sink=sink)
    frames = 0
    errors = 0
    spent = 0.0
    prev_t: int | None = None
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            frame = decode_frame(line)
        except DecodeError as exc:
            errors += 1
            engine._diag(engine.last_t or 0, f"bad frame skipped: {exc}")
            continue
        if speed == "realtime" and prev_t is not None and frame.t_ms > prev_t:
            time.sleep((frame.t_ms - prev_t) / 1000.0)
        prev_t = frame.t_ms
        started = time.perf_counter()
        engine.step(frame)
        spent += time.perf_counter() - started
        frames += 1
        if snapshot_hook is not None:
            snapshot_hook(engine.snapshot())
    engine.finish()
    mean = spent / frames if frames else 0.0
    return engine.log, ReplayStats(
        frames=frames, decode_errors=errors, mean_step_seconds=mean
    )


def record_stream(lines, out_path: str) -> int:
    """Append every line that decodes as a frame, verbatim, to a trace file.

    Returns the number of frames written; undecodable lines are dropped.
    """
    count = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for line in lines:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            try:
                decode_frame(line)
            except DecodeError:
                continue
            fh.write(line + "\n")
            count += 1
    return count
