"""Event sinks: where input events go after the engine emits them.

The engine is sink-agnostic; swapping sinks never changes engine behavior.
VirtualSink just collects (the default and the test double).  OsSink
forwards to a real OS injection backend when one is installed; its dry-run
mode exercises the full sink path without touching the OS, which is how the
no-behavior-change property is checked on machines without a display.
"""

from __future__ import annotations

from .frames import InputEvent


class VirtualSink:
    """Collects events in memory."""

    def __init__(self) -> None:
        self.events: list[InputEvent] = []

    def emit(self, event: InputEvent) -> None:
        self.events.append(event)

    def close(self) -> None:
        pass


class OsSink:
    """Injects events into the OS via pynput, if available.

    Constructing with dry_run=True skips the backend entirely: events are
    accepted and counted but nothing is injected.
    """

    def __init__(self, dry_run: bool = False):
        self.dry_run = dry_run
        self.count = 0
        self._keyboard = None
        self._mouse = None
        if not dry_run:
            try:
                from pynput.keyboard import Controller as KeyboardController
                from pynput.mouse import Controller as MouseController
            except ImportError as exc:
                raise RuntimeError(
                    "OS sink needs the pynput package (pip install pynput); "
                    "use --sink virtual otherwise"
                ) from exc
            self._keyboard = KeyboardController()
            self._mouse = MouseController()

    def emit(self, event: InputEvent) -> None:
        self.count += 1
        if self.dry_run:
            return
        self._inject(event)

    def _inject(self, event: InputEvent) -> None:
        from pynput.keyboard import Key
        from pynput.mouse import Button

        kind = event.kind
        if kind in ("key_down", "key_up", "key_press"):
            name = event.payload["key"]
            key = getattr(Key, name, name)
            if kind == "key_down":
                self._keyboard.press(key)
            elif kind == "key_up":
                self._keyboard.release(key)
            else:
                self._keyboard.press(key)
                self._keyboard.release(key)
        elif kind == "mouse_move_abs":
            self._mouse.position = (event.payload["x"], event.payload["y"])
        elif kind == "mouse_move_rel":
            self._mouse.move(event.payload["dx"], event.payload["dy"])
        elif kind == "mouse_click":
            self._mouse.click(getattr(Button, event.payload["button"]))
        elif kind == "scroll":
            self._mouse.scroll(0, event.payload["amount"])

    def close(self) -> None:
        pass


def make_sink(name: str):
    if name == "virtual":
        return VirtualSink()
    if name == "os":
        return OsSink()
    raise ValueError(f"unknown sink {name!r}")
