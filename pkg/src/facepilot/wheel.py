"""Selection wheels: layout geometry, segment selection, open/confirm machine.

A multi-item wheel opens on the rising edge of its owner intention, a
segment is highlighted by gaze or head direction while it stays open, and
the falling edge of the owner confirms the highlighted item (or cancels if
nothing was ever highlighted).  Single-item wheels skip the UI entirely and
act as hold bindings: down on rise, up on fall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

RADIAL = "radial"
SQUARE = "square"


@dataclass(frozen=True)
class WheelSpec:
    """One intention's binding: the item list plus layout and side effects.

    `items` holds action tokens: keys ("z", "shift", "ctrl+c"), mouse
    buttons ("mouse_left"), scroll directions, mode names, None for no-op.
    `induce_lock_ms` suppresses cursor moves for that long after the item
    fires.
    """

    owner: str
    items: tuple[str | None, ...]
    layout_type: str = RADIAL
    induce_lock_ms: int | None = None

    def validate(self) -> None:
        if not self.items:
            raise ValueError(f"wheel for {self.owner!r} has no items")
        if self.layout_type not in (RADIAL, SQUARE):
            raise ValueError(f"unknown layout_type {self.layout_type!r}")
        if self.induce_lock_ms is not None and self.induce_lock_ms <= 0:
            raise ValueError("induce duration must be > 0")

    @property
    def single(self) -> bool:
        return len(self.items) == 1


@dataclass(frozen=True)
class WheelGeometry:
    """Item placement: equal angular sectors (radial) or a row-major grid."""

    kind: str
    count: int
    sector_deg: float = 0.0
    columns: int = 0
    rows: int = 0

    def sector_center_deg(self, index: int) -> float:
        """Clockwise-from-up center angle of a radial sector."""
        return (index * self.sector_deg) % 360.0

    def cell(self, index: int) -> tuple[int, int]:
        """(row, column) of a square-grid item."""
        return divmod(index, self.columns)


def layout(spec: WheelSpec) -> WheelGeometry:
    """Compute item geometry.

    Radial: n equal sectors of 360/n degrees, item 0 centered at 12 o'clock,
    following items clockwise.  Square: ceil(sqrt(n)) columns, row-major,
    as many rows as needed (the last row may be short).
    """
    n = len(spec.items)
    if spec.layout_type == SQUARE:
        columns = math.ceil(math.sqrt(n))
        rows = math.ceil(n / columns)
        return WheelGeometry(kind=SQUARE, count=n, columns=columns, rows=rows)
    return WheelGeometry(kind=RADIAL, count=n, sector_deg=360.0 / n)


def direction_to_index(geometry: WheelGeometry, dx: float, dy: float) -> int | None:
    """Radial pick from a direction vector (dx east, dy up).

    Returns the sector whose center is nearest the direction angle; a zero
    vector has no direction and picks nothing.
    """
    if geometry.kind != RADIAL:
        raise ValueError("direction selection needs a radial wheel")
    if dx == 0.0 and dy == 0.0:
        return None
    if geometry.count == 1:
        return 0
    angle = math.degrees(math.atan2(dx, dy)) % 360.0
    step = geometry.sector_deg
    return int((angle + step / 2.0) // step) % geometry.count


def point_to_index(geometry: WheelGeometry, u: float, v: float) -> int | None:
    """Square-grid pick from a normalized point (u right, v down, in [0,1]).

    Points land in the cell under them; cells past the last item (short
    final row) pick nothing.
    """
    if geometry.kind != SQUARE:
        raise ValueError("point selection needs a square wheel")
    u = min(max(u, 0.0), 1.0)
    v = min(max(v, 0.0), 1.0)
    col = min(int(u * geometry.columns), geometry.columns - 1)
    row = min(int(v * geometry.rows), geometry.rows - 1)
    index = row * geometry.columns + col
    return index if index < geometry.count else None


@dataclass(frozen=True)
class WheelAction:
    """What the state machine asks the engine to do for one edge."""

    kind: str  # "open", "confirm", "cancel", "hold_down", "hold_up"
    owner: str
    token: str | None = None
    induce_lock_ms: int | None = None


class WheelMachine:
    """Tracks the at-most-one open wheel and turns edges into actions.

    The highlight latches: once a segment is picked it stays picked until a
    different segment is picked or the wheel closes, so returning to the
    deadzone before release keeps the choice.  Confirm uses the highlight as
    of the previous frame (update_highlight runs after edge handling), which
    makes a confirmed choice stable for at least one full frame.
    """

    def __init__(self) -> None:
        self.open_spec: WheelSpec | None = None
        self.geometry: WheelGeometry | None = None
        self.highlight: int | None = None
        self.opened_at: int = 0

    @property
    def is_open(self) -> bool:
        return self.open_spec is not None

    def reset(self) -> None:
        self.open_spec = None
        self.geometry = None
        self.highlight = None

    def cancel(self) -> None:
        self.reset()

    def update_highlight(self, index: int | None) -> None:
        """Latch a new pick; None (deadzone / off-grid) keeps the old one."""
        if self.open_spec is not None and index is not None:
            self.highlight = index

    def on_edges(
        self,
        risen: tuple[str, ...],
        fallen: tuple[str, ...],
        bindings: dict[str, WheelSpec],
        t_ms: int,
    ) -> list[WheelAction]:
        """Apply this frame's intention edges to the wheel state.

        Falling edges are handled before rising edges so a release and a new
        press in one frame confirm the old wheel before opening the new.
        Single-item owners never open a wheel; they produce hold actions.
        Opening a wheel while another is open cancels the first silently.
        """
        actions: list[WheelAction] = []
        for name in fallen:
            spec = bindings.get(name)
            if spec is None:
                continue
            if spec.single:
                actions.append(WheelAction("hold_up", owner=name, token=spec.items[0]))
            elif self.open_spec is not None and self.open_spec.owner == name:
                if self.highlight is None:
                    actions.append(WheelAction("cancel", owner=name))
                else:
                    actions.append(
                        WheelAction(
                            "confirm",
                            owner=name,
                            token=self.open_spec.items[self.highlight],
                            induce_lock_ms=spec.induce_lock_ms,
                        )
                    )
                self.reset()
        for name in risen:
            spec = bindings.get(name)
            if spec is None:
                continue
            if spec.single:
                actions.append(
                    WheelAction(
                        "hold_down",
                        owner=name,
                        token=spec.items[0],
                        induce_lock_ms=spec.induce_lock_ms,
                    )
                )
                continue
            if self.open_spec is not None and self.open_spec.owner != name:
                actions.append(WheelAction("cancel", owner=self.open_spec.owner))
            self.open_spec = spec
            self.geometry = layout(spec)
            self.highlight = None
            self.opened_at = t_ms
            actions.append(WheelAction("open", owner=name))
        return actions

    def snapshot(self) -> dict | None:
        """Read-only view for the overlay UI; None when no wheel is open."""
        if self.open_spec is None:
            return None
        geometry: dict = {"kind": self.geometry.kind}
        if self.geometry.kind == RADIAL:
            geometry["sector_deg"] = self.geometry.sector_deg
        else:
            geometry["columns"] = self.geometry.columns
            geometry["rows"] = self.geometry.rows
        return {
            "owner": self.open_spec.owner,
            "items": list(self.open_spec.items),
            "highlight": self.highlight,
            "opened_at": self.opened_at,
            "geometry": geometry,
        }
