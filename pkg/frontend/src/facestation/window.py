"""Always-on-top overlay window (Tk painter for OverlayScene).

Strictly a viewer: it draws what the engine snapshot channel says and
sends nothing back.  Tk is imported lazily so headless machines can use
every other part of the station; construction fails with a clear message
when no display is available.
"""

from __future__ import annotations

import json
import math
import queue
import socket
import threading

from .overlay import OverlayScene, disconnected_banner, layout_overlay

CANVAS_W = 360
CANVAS_H = 360
WHEEL_RADIUS = 130


class OverlayWindow:
    """Borderless top-most window fed by `show(scene)`."""

    def __init__(self):
        try:
            import tkinter as tk
        except ImportError as exc:
            raise RuntimeError(
                "the overlay window needs tkinter; use the text HUD instead"
            ) from exc
        try:
            self._root = tk.Tk()
        except tk.TclError as exc:
            raise RuntimeError(f"no display available for the overlay: {exc}") from exc
        self._tk = tk
        self._root.overrideredirect(True)
        self._root.attributes("-topmost", True)
        try:
            self._root.attributes("-alpha", 0.85)
        except tk.TclError:
            pass  # compositor without transparency
        self._canvas = tk.Canvas(
            self._root, width=CANVAS_W, height=CANVAS_H, bg="black", highlightthickness=0
        )
        self._canvas.pack()

    def show(self, scene: OverlayScene | None) -> None:
        c = self._canvas
        c.delete("all")
        if scene is None:
            c.create_text(
                CANVAS_W / 2,
                CANVAS_H / 2,
                text=disconnected_banner(),
                fill="orange",
                width=CANVAS_W - 20,
            )
            self._root.update()
            return
        dim = "gray40" if scene.stale else "white"
        accent = "gray40" if scene.stale else "cyan"
        c.create_text(
            10, 12, anchor="w", fill=dim, text=f"mode {scene.mode} / {scene.cursor_mode}"
        )
        if scene.held:
            c.create_text(
                10, 30, anchor="w", fill=accent, text="holding " + " ".join(scene.held)
            )
        if scene.dwell_fraction is not None:
            # Countdown ring: the arc shrinks as the lock runs out.
            extent = -359.9 * scene.dwell_fraction
            c.create_arc(
                CANVAS_W - 58,
                8,
                CANVAS_W - 8,
                58,
                start=90,
                extent=extent,
                style=self._tk.ARC,
                outline=accent,
                width=4,
            )
        if scene.wheel is not None:
            if scene.wheel.kind == "radial":
                self._draw_radial(scene, dim, accent)
            else:
                self._draw_grid(scene, dim, accent)
        self._root.update()

    def _draw_radial(self, scene: OverlayScene, dim: str, accent: str) -> None:
        c = self._canvas
        cx, cy = CANVAS_W / 2, CANVAS_H / 2 + 20
        for seg in scene.wheel.segments:
            # Tk arcs measure counterclockwise from east; scene angles are
            # clockwise from north.
            extent = (seg.end_deg - seg.start_deg) % 360.0 or 360.0
            start_tk = 90.0 - seg.start_deg - extent
            fill = accent if seg.emphasized else ""
            c.create_arc(
                cx - WHEEL_RADIUS,
                cy - WHEEL_RADIUS,
                cx + WHEEL_RADIUS,
                cy + WHEEL_RADIUS,
                start=start_tk,
                extent=extent,
                outline=dim,
                fill=fill,
                stipple="gray25" if seg.emphasized else "",
            )
            mid = math.radians((seg.start_deg + extent / 2.0) % 360.0)
            tx = cx + math.sin(mid) * WHEEL_RADIUS * 0.7
            ty = cy - math.cos(mid) * WHEEL_RADIUS * 0.7
            c.create_text(
                tx,
                ty,
                text=seg.label,
                fill=accent if seg.emphasized else dim,
            )

    def _draw_grid(self, scene: OverlayScene, dim: str, accent: str) -> None:
        c = self._canvas
        cols = max(1, scene.wheel.grid_cols)
        rows = max(cell.row for cell in scene.wheel.cells) + 1
        cell_w = (CANVAS_W - 20) / cols
        cell_h = (CANVAS_H - 60) / rows
        for cell in scene.wheel.cells:
            x0 = 10 + cell.col * cell_w
            y0 = 50 + cell.row * cell_h
            color = accent if cell.emphasized else dim
            c.create_rectangle(x0, y0, x0 + cell_w, y0 + cell_h, outline=color)
            c.create_text(
                x0 + cell_w / 2, y0 + cell_h / 2, text=cell.label, fill=color
            )

    def close(self) -> None:
        self._root.destroy()


def watch_snapshots(endpoint: str, out_queue: "queue.Queue[dict | None]") -> threading.Thread:
    """Reader thread: engine snapshot lines -> queue; None on channel loss."""
    host, _, port = endpoint.rpartition(":")

    def run() -> None:
        try:
            with socket.create_connection((host, int(port)), timeout=10.0) as conn:
                with conn.makefile("r", encoding="utf-8") as fh:
                    for line in fh:
                        line = line.strip()
                        if line:
                            out_queue.put(json.loads(line))
        except OSError:
            pass
        out_queue.put(None)

    thread = threading.Thread(target=run, daemon=True)
    thread.start()
    return thread


def run_overlay(endpoint: str, dwell_total_ms: int = 1000) -> None:
    """Connect to the engine's snapshot channel and mirror it on screen."""
    window = OverlayWindow()
    snapshots: "queue.Queue[dict | None]" = queue.Queue()
    watch_snapshots(endpoint, snapshots)
    last_t = 0
    try:
        while True:
            try:
                snap = snapshots.get(timeout=0.5)
            except queue.Empty:
                continue
            if snap is None:
                window.show(None)
                return
            last_t = max(last_t, int(snap.get("t_ms", 0)))
            window.show(layout_overlay(snap, now_ms=last_t, dwell_total_ms=dwell_total_ms))
    finally:
        window.close()
