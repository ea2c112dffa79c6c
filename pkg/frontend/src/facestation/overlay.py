"""Overlay layout: engine state snapshots -> a drawable scene description.

The engine publishes one JSON snapshot per frame (mode, active intentions,
held keys, open wheel, cursor, dwell countdown).  `layout_overlay` turns a
snapshot into an `OverlayScene` — a pure data structure with every visual
decision already made: which wheel segment is emphasized, how far the
dwell ring has drained, whether the whole display should dim because the
snapshot is stale.  Painters (the Tk window in `window.py`, the text HUD
here) only draw what the scene says, so layout rules are testable without
a display.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

STALE_MS = 200
DWELL_TOTAL_MS_DEFAULT = 1000


@dataclass(frozen=True)
class Segment:
    """One radial wheel sector, angles in degrees clockwise from up."""

    label: str
    start_deg: float
    end_deg: float
    emphasized: bool


@dataclass(frozen=True)
class GridCell:
    label: str
    row: int
    col: int
    emphasized: bool


@dataclass(frozen=True)
class WheelScene:
    kind: str  # "radial" | "square"
    owner: str
    segments: tuple[Segment, ...] = ()
    cells: tuple[GridCell, ...] = ()
    grid_cols: int = 0
    highlight: int | None = None


@dataclass(frozen=True)
class OverlayScene:
    """Everything a painter needs for one frame."""

    t_ms: int
    mode: str
    cursor_mode: str
    stale: bool
    active: tuple[str, ...]
    held: tuple[str, ...]
    cursor: tuple[int, int] | None
    dwell_fraction: float | None  # remaining/total, None when no dwell lock
    wheel: WheelScene | None


def _radial_segments(items: list, highlight: int | None) -> tuple[Segment, ...]:
    n = len(items)
    sector = 360.0 / n
    segments = []
    for i, item in enumerate(items):
        start = (i * sector - sector / 2.0) % 360.0
        segments.append(
            Segment(
                label="(cancel)" if item is None else str(item),
                start_deg=start,
                end_deg=(start + sector) % 360.0,
                emphasized=(i == highlight),
            )
        )
    return tuple(segments)


def _grid_cells(items: list, highlight: int | None) -> tuple[tuple[GridCell, ...], int]:
    cols = math.ceil(math.sqrt(len(items)))
    cells = []
    for i, item in enumerate(items):
        cells.append(
            GridCell(
                label="(cancel)" if item is None else str(item),
                row=i // cols,
                col=i % cols,
                emphasized=(i == highlight),
            )
        )
    return tuple(cells), cols


def layout_overlay(
    snapshot: dict,
    now_ms: int,
    dwell_total_ms: int = DWELL_TOTAL_MS_DEFAULT,
) -> OverlayScene:
    """Lay one snapshot out as a scene.

    `now_ms` is the receiver's clock on the snapshot's own timeline; a
    snapshot older than STALE_MS is marked stale so the painter dims it
    rather than showing confidently wrong state.
    """
    t_ms = int(snapshot.get("t_ms", 0))
    wheel_state = snapshot.get("wheel")
    wheel = None
    if wheel_state is not None:
        items = list(wheel_state["items"])
        highlight = wheel_state.get("highlight")
        kind = wheel_state.get("geometry", {}).get("kind", "radial")
        if kind == "square":
            cells, cols = _grid_cells(items, highlight)
            wheel = WheelScene(
                kind="square",
                owner=str(wheel_state.get("owner", "")),
                cells=cells,
                grid_cols=cols,
                highlight=highlight,
            )
        else:
            wheel = WheelScene(
                kind="radial",
                owner=str(wheel_state.get("owner", "")),
                segments=_radial_segments(items, highlight),
                highlight=highlight,
            )

    remaining = snapshot.get("dwell_remaining_ms", 0) or 0
    dwell_fraction = None
    if remaining > 0 and dwell_total_ms > 0:
        dwell_fraction = min(1.0, remaining / dwell_total_ms)

    cursor = snapshot.get("cursor")
    if cursor is not None:
        cursor = (int(cursor["x"]), int(cursor["y"]))

    return OverlayScene(
        t_ms=t_ms,
        mode=str(snapshot.get("mode", "?")),
        cursor_mode=str(snapshot.get("cursor_mode", "?")),
        stale=(now_ms - t_ms) > STALE_MS,
        active=tuple(snapshot.get("active", ())),
        held=tuple(snapshot.get("held", ())),
        cursor=cursor,
        dwell_fraction=dwell_fraction,
        wheel=wheel,
    )


def render_text(scene: OverlayScene) -> str:
    """Monospace HUD for terminals and tests; one scene per block."""
    lines = []
    header = f"mode={scene.mode} cursor={scene.cursor_mode}"
    if scene.stale:
        header += "  [STALE]"
    lines.append(header)
    if scene.cursor is not None:
        lines.append(f"pointer at ({scene.cursor[0]}, {scene.cursor[1]})")
    if scene.dwell_fraction is not None:
        filled = round(scene.dwell_fraction * 10)
        lines.append("dwell [" + "#" * filled + "." * (10 - filled) + "]")
    if scene.held:
        lines.append("holding: " + " ".join(scene.held))
    if scene.active:
        lines.append("active: " + " ".join(scene.active))
    if scene.wheel is not None:
        lines.append(f"wheel ({scene.wheel.owner}):")
        if scene.wheel.kind == "radial":
            for seg in scene.wheel.segments:
                marker = ">" if seg.emphasized else " "
                lines.append(
                    f" {marker} {seg.label:<12} {seg.start_deg:6.1f}-{seg.end_deg:6.1f} deg"
                )
        else:
            rows: dict[int, list[str]] = {}
            for cell in scene.wheel.cells:
                text = f"[{cell.label}]" if cell.emphasized else f" {cell.label} "
                rows.setdefault(cell.row, []).append(text)
            for row in sorted(rows):
                lines.append("  " + " ".join(rows[row]))
    return "\n".join(lines)


def disconnected_banner() -> str:
    return "mode=?  [DISCONNECTED] waiting for the engine snapshot channel"
