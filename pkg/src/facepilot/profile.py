"""Profile loading, validation, serialization, and key-coverage reporting.

A profile bundles everything a control session needs: head-angle centering
constants, per-mode keymaps binding intentions to wheels, the intention
expressions with their priority rules, and cursor tuning parameters.  The
file format is YAML with the exact field names shown in profiles/game.yaml;
loading validates every cross-reference up front so the engine never sees a
dangling name.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields, replace

import yaml

from .cursor import CursorParams
from .expressions import (
    ANY,
    DEFAULT_DEBOUNCE_FRAMES,
    Condition,
    IntentionSpec,
    PriorityRule,
)
from .wheel import RADIAL, SQUARE, WheelSpec

# Pseudo-intentions driven by head pose rather than blendshape expressions.
HEAD_DIRECTIONS = ("head_up", "head_down", "head_left", "head_right")
HEAD_ROLLS = ("head_roll_left", "head_roll_right")
RESERVED_INTENTIONS = HEAD_DIRECTIONS + HEAD_ROLLS

MOUSE_TOKENS = ("mouse_left", "mouse_middle", "mouse_right")
SCROLL_TOKENS = ("scroll_up", "scroll_down")
# Recognized but unbound: load with a warning, emit nothing when confirmed.
META_TOKENS = ("keydown", "keyup")

NAMED_KEYS = frozenset(
    {
        "esc",
        "space",
        "ctrl",
        "shift",
        "alt",
        "caps",
        "tab",
        "fn",
        "win",
        "enter",
        "backspace",
        "delete",
        "home",
        "end",
        "up",
        "down",
        "left",
        "right",
    }
)
HOLD_MODIFIERS = frozenset({"shift", "ctrl", "alt", "fn", "win"})
_FKEY = re.compile(r"^F([1-9]|1[0-9]|2[0-4])$")

DEFAULT_MODE_BINDINGS = {"game": "relative", "type": "absolute"}
CURSOR_MODES = ("absolute", "relative")


class ConfigError(ValueError):
    """Profile failed to parse or validate; message points at the field."""


@dataclass(frozen=True)
class Profile:
    """A fully validated control profile; immutable after load."""

    head_center: tuple[float, float, float]
    head_scale: tuple[float, float, float]
    mode_order: tuple[str, ...]
    keymaps: dict[str, dict[str, WheelSpec]]
    intentions: tuple[IntentionSpec, ...]
    rules: tuple[PriorityRule, ...]
    debounce_frames: int
    cursor: CursorParams
    mode_bindings: dict[str, str]
    warnings: tuple[str, ...]

    @property
    def initial_mode(self) -> str:
        return self.mode_order[0]

    def cursor_mode(self, mode: str) -> str:
        return self.mode_bindings.get(mode, "absolute")


@dataclass(frozen=True)
class CoverageReport:
    """Which required action tokens some (mode, intention, item) can reach."""

    reachable: dict[str, tuple[str, ...]]
    missing: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.missing


def is_key_token(token: str) -> bool:
    """True for a single emittable key name (no chords)."""
    if len(token) == 1 and token.isprintable():
        return True
    return token in NAMED_KEYS or bool(_FKEY.match(token))


def classify_token(token: str | None, mode_names: frozenset[str]) -> str:
    """Sort an action token into its behavior class.

    Classes: "null", "mouse", "scroll", "meta", "mode", "key", "chord".
    Anything else is a dangling mode reference or a typo and raises.
    """
    if token is None:
        return "null"
    if token in MOUSE_TOKENS:
        return "mouse"
    if token in SCROLL_TOKENS:
        return "scroll"
    if token in META_TOKENS:
        return "meta"
    if token in mode_names:
        return "mode"
    if is_key_token(token):
        return "key"
    if "+" in token:
        parts = token.split("+")
        if len(parts) >= 2 and all(is_key_token(p) for p in parts):
            return "chord"
        raise ConfigError(f"unrecognized chord token {token!r}")
    raise ConfigError(
        f"unknown action token {token!r} (not a recognized key; "
        f"if it names a mode, that mode is not defined)"
    )


def _require_map(value: object, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: expected a mapping")
    return value


def _number(value: object, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number")
    return float(value)


def _angles(value: object, where: str) -> tuple[float, float, float]:
    rec = _require_map(value, where)
    extra = set(rec) - {"yaw", "pitch", "roll"}
    if extra:
        raise ConfigError(f"{where}: unknown field {sorted(extra)[0]!r}")
    out = []
    for axis in ("yaw", "pitch", "roll"):
        if axis not in rec:
            raise ConfigError(f"{where}: missing {axis}")
        out.append(_number(rec[axis], f"{where}.{axis}"))
    return tuple(out)


def _parse_condition(rec: object, where: str) -> Condition:
    rec = _require_map(rec, where)
    allowed = {"feature", "operator", "threshold", "min", "max", "compare_to"}
    extra = set(rec) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown field {sorted(extra)[0]!r}")
    if "feature" not in rec or "operator" not in rec:
        raise ConfigError(f"{where}: feature and operator are required")
    cond = Condition(
        feature=str(rec["feature"]),
        operator=str(rec["operator"]),
        threshold=_number(rec["threshold"], f"{where}.threshold")
        if "threshold" in rec
        else None,
        min_value=_number(rec["min"], f"{where}.min") if "min" in rec else None,
        max_value=_number(rec["max"], f"{where}.max") if "max" in rec else None,
        compare_to=str(rec["compare_to"]) if "compare_to" in rec else None,
    )
    try:
        cond.validate()
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return cond


def _parse_expressions(rec: object, where: str) -> tuple[IntentionSpec, ...]:
    rec = _require_map(rec, where)
    specs = []
    for name, body in rec.items():
        name = str(name)
        if name in RESERVED_INTENTIONS:
            raise ConfigError(
                f"{where}.{name}: reserved head pseudo-intention cannot have "
                f"an expression (it is driven by head pose)"
            )
        body = _require_map(body, f"{where}.{name}")
        extra = set(body) - {"conditions", "combine"}
        if extra:
            raise ConfigError(f"{where}.{name}: unknown field {sorted(extra)[0]!r}")
        raw_conditions = body.get("conditions")
        if not isinstance(raw_conditions, list) or not raw_conditions:
            raise ConfigError(f"{where}.{name}: conditions must be a non-empty list")
        conditions = tuple(
            _parse_condition(c, f"{where}.{name}.conditions[{i}]")
            for i, c in enumerate(raw_conditions)
        )
        spec = IntentionSpec(
            name=name, conditions=conditions, combine=str(body.get("combine", "AND"))
        )
        try:
            spec.validate()
        except ValueError as exc:
            raise ConfigError(f"{where}.{name}: {exc}") from None
        specs.append(spec)
    return tuple(specs)


def _parse_rules(
    rec: object, declared: frozenset[str], where: str
) -> tuple[PriorityRule, ...]:
    if rec is None:
        return ()
    if not isinstance(rec, list):
        raise ConfigError(f"{where}: expected a list")
    rules = []
    for i, body in enumerate(rec):
        body = _require_map(body, f"{where}[{i}]")
        extra = set(body) - {"when", "disable", "except"}
        if extra:
            raise ConfigError(f"{where}[{i}]: unknown field {sorted(extra)[0]!r}")
        when = str(body.get("when", ""))
        if when != ANY and when not in declared:
            raise ConfigError(f"{where}[{i}]: when: {when!r} is not a declared intention")
        disable = body.get("disable")
        if not isinstance(disable, list) or not disable:
            raise ConfigError(f"{where}[{i}]: disable must be a non-empty list")
        excepted = body.get("except", [])
        if not isinstance(excepted, list):
            raise ConfigError(f"{where}[{i}]: except must be a list")
        for field_name, names in (("disable", disable), ("except", excepted)):
            for name in names:
                if str(name) not in declared:
                    raise ConfigError(
                        f"{where}[{i}].{field_name}: {name!r} is not a declared intention"
                    )
        rules.append(
            PriorityRule(
                when=when,
                disable=tuple(str(n) for n in disable),
                excepted=tuple(str(n) for n in excepted),
            )
        )
    return tuple(rules)


def _parse_item(item: object, where: str) -> str | None:
    if item is None:
        return None
    if isinstance(item, bool):
        raise ConfigError(f"{where}: boolean is not a valid action token")
    if isinstance(item, int):
        return str(item)
    if isinstance(item, str):
        return item
    raise ConfigError(f"{where}: invalid action token {item!r}")


def _parse_wheel_spec(owner: str, body: object, where: str) -> WheelSpec:
    body = _require_map(body, where)
    extra = set(body) - {"wheel", "layout_type", "induce"}
    if extra:
        raise ConfigError(f"{where}: unknown field {sorted(extra)[0]!r}")
    raw_items = body.get("wheel")
    if not isinstance(raw_items, list) or not raw_items:
        raise ConfigError(f"{where}: wheel must be a non-empty list")
    items = tuple(
        _parse_item(item, f"{where}.wheel[{i}]") for i, item in enumerate(raw_items)
    )
    layout_type = str(body.get("layout_type", RADIAL))
    if layout_type not in (RADIAL, SQUARE):
        raise ConfigError(f"{where}: unknown layout_type {layout_type!r}")
    induce_ms = None
    if "induce" in body:
        induce = _require_map(body["induce"], f"{where}.induce")
        extra = set(induce) - {"lock_mouse_move"}
        if extra:
            raise ConfigError(f"{where}.induce: unknown field {sorted(extra)[0]!r}")
        if "lock_mouse_move" not in induce:
            raise ConfigError(f"{where}.induce: missing lock_mouse_move")
        lock = _require_map(induce["lock_mouse_move"], f"{where}.induce.lock_mouse_move")
        extra = set(lock) - {"duration"}
        if extra:
            raise ConfigError(
                f"{where}.induce.lock_mouse_move: unknown field {sorted(extra)[0]!r}"
            )
        duration = _number(lock.get("duration"), f"{where}.induce.lock_mouse_move.duration")
        if duration <= 0:
            raise ConfigError(f"{where}.induce.lock_mouse_move.duration must be > 0")
        induce_ms = int(round(duration * 1000))
    return WheelSpec(
        owner=owner, items=items, layout_type=layout_type, induce_lock_ms=induce_ms
    )


def _parse_cursor(
    rec: object, mode_names: frozenset[str], where: str
) -> tuple[CursorParams, dict[str, str]]:
    bindings = dict(DEFAULT_MODE_BINDINGS)
    bindings = {m: b for m, b in bindings.items() if m in mode_names}
    if rec is None:
        return CursorParams(), bindings
    rec = _require_map(rec, where)
    param_names = {f.name for f in fields(CursorParams)}
    overrides = {}
    for key, value in rec.items():
        if key == "mode_bindings":
            declared = _require_map(value, f"{where}.mode_bindings")
            for mode, binding in declared.items():
                if str(mode) not in mode_names:
                    raise ConfigError(
                        f"{where}.mode_bindings: unknown mode {mode!r}"
                    )
                if binding not in CURSOR_MODES:
                    raise ConfigError(
                        f"{where}.mode_bindings.{mode}: expected absolute or relative"
                    )
                bindings[str(mode)] = str(binding)
            continue
        if key not in param_names:
            raise ConfigError(f"{where}: unknown field {key!r}")
        if key == "smooth_window":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{where}.{key}: expected an integer")
            overrides[key] = value
        elif key.endswith("_ms"):
            overrides[key] = int(_number(value, f"{where}.{key}"))
        else:
            overrides[key] = _number(value, f"{where}.{key}")
    params = replace(CursorParams(), **overrides)
    try:
        params.validate()
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return params, bindings


def loads_profile(text: str, origin: str = "<string>") -> Profile:
    """Parse and validate a profile from YAML text."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{origin}: parse error: {exc}") from None
    doc = _require_map(doc, origin)
    allowed = {
        "head_angles_center",
        "head_angles_scale",
        "key_config",
        "expression_evaluator_config",
        "cursor",
    }
    extra = set(doc) - allowed
    if extra:
        raise ConfigError(f"{origin}: unknown field {sorted(extra)[0]!r}")
    for required in ("head_angles_center", "head_angles_scale", "key_config",
                     "expression_evaluator_config"):
        if required not in doc:
            raise ConfigError(f"{origin}: missing {required}")

    head_center = _angles(doc["head_angles_center"], "head_angles_center")
    head_scale = _angles(doc["head_angles_scale"], "head_angles_scale")
    if any(s <= 0 for s in head_scale):
        raise ConfigError("head_angles_scale: every scale must be > 0")

    evaluator = _require_map(
        doc["expression_evaluator_config"], "expression_evaluator_config"
    )
    extra = set(evaluator) - {"expressions", "priority_rules", "debounce_frames"}
    if extra:
        raise ConfigError(
            f"expression_evaluator_config: unknown field {sorted(extra)[0]!r}"
        )
    if "expressions" not in evaluator:
        raise ConfigError("expression_evaluator_config: missing expressions")
    intentions = _parse_expressions(
        evaluator["expressions"], "expression_evaluator_config.expressions"
    )
    declared = frozenset(spec.name for spec in intentions)
    rules = _parse_rules(
        evaluator.get("priority_rules"),
        declared,
        "expression_evaluator_config.priority_rules",
    )
    debounce = evaluator.get("debounce_frames", DEFAULT_DEBOUNCE_FRAMES)
    if isinstance(debounce, bool) or not isinstance(debounce, int) or debounce < 1:
        raise ConfigError(
            "expression_evaluator_config.debounce_frames: expected an integer >= 1"
        )

    key_config = _require_map(doc["key_config"], "key_config")
    if not key_config:
        raise ConfigError("key_config: at least one mode is required")
    mode_order = tuple(str(m) for m in key_config)
    mode_names = frozenset(mode_order)

    warnings: list[str] = []
    keymaps: dict[str, dict[str, WheelSpec]] = {}
    for raw_mode, raw_bindings in key_config.items():
        mode = str(raw_mode)
        bindings: dict[str, WheelSpec] = {}
        mode_rec = _require_map(raw_bindings, f"key_config.{mode}")
        for owner, body in mode_rec.items():
            owner = str(owner)
            where = f"key_config.{mode}.{owner}"
            if owner not in declared and owner not in RESERVED_INTENTIONS:
                raise ConfigError(f"{where}: {owner!r} is not a declared intention")
            spec = _parse_wheel_spec(owner, body, where)
            for i, token in enumerate(spec.items):
                cls = classify_token(token, mode_names)
                if cls == "meta":
                    warnings.append(
                        f"{where}.wheel[{i}]: {token!r} is recognized but unbound; "
                        f"confirming it emits nothing"
                    )
                elif cls in ("key", "chord") and not spec.single:
                    base = token.split("+")[0] if cls == "chord" else token
                    if base in HOLD_MODIFIERS and cls == "key":
                        warnings.append(
                            f"{where}.wheel[{i}]: modifier {token!r} in a multi-item "
                            f"wheel acts as a tap when confirmed"
                        )
            if owner in HEAD_DIRECTIONS:
                if not spec.single or classify_token(
                    spec.items[0], mode_names
                ) not in ("key", "null"):
                    raise ConfigError(
                        f"{where}: head direction bindings must be a single key"
                    )
            if owner in HEAD_ROLLS:
                if not spec.single or spec.items[0] not in SCROLL_TOKENS:
                    raise ConfigError(
                        f"{where}: head roll bindings must be a single scroll token"
                    )
            bindings[owner] = spec
        keymaps[mode] = bindings

    cursor_params, mode_bindings = _parse_cursor(
        doc.get("cursor"), mode_names, "cursor"
    )

    return Profile(
        head_center=head_center,
        head_scale=head_scale,
        mode_order=mode_order,
        keymaps=keymaps,
        intentions=intentions,
        rules=rules,
        debounce_frames=debounce,
        cursor=cursor_params,
        mode_bindings=mode_bindings,
        warnings=tuple(warnings),
    )


def load_profile(path: str) -> Profile:
    """Load a profile file; all errors surface as ConfigError."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read profile {path}: {exc}") from None
    return loads_profile(text, origin=path)


def _condition_record(cond: Condition) -> dict:
    rec: dict = {"feature": cond.feature, "operator": cond.operator}
    if cond.operator == "BETWEEN":
        rec["min"] = cond.min_value
        rec["max"] = cond.max_value
    else:
        rec["threshold"] = cond.threshold
    if cond.compare_to is not None:
        rec["compare_to"] = cond.compare_to
    return rec


def _wheel_record(spec: WheelSpec) -> dict:
    rec: dict = {"wheel": list(spec.items)}
    if spec.layout_type != RADIAL:
        rec["layout_type"] = spec.layout_type
    if spec.induce_lock_ms is not None:
        rec["induce"] = {
            "lock_mouse_move": {"duration": spec.induce_lock_ms / 1000.0}
        }
    return rec


def profile_to_record(profile: Profile) -> dict:
    """The canonical plain-data form used for serialization."""
    center = dict(zip(("yaw", "pitch", "roll"), profile.head_center))
    scale = dict(zip(("yaw", "pitch", "roll"), profile.head_scale))
    key_config = {
        mode: {owner: _wheel_record(spec) for owner, spec in bindings.items()}
        for mode, bindings in profile.keymaps.items()
    }
    expressions = {
        spec.name: {
            "conditions": [_condition_record(c) for c in spec.conditions],
            "combine": spec.combine,
        }
        for spec in profile.intentions
    }
    evaluator: dict = {
        "expressions": expressions,
        "debounce_frames": profile.debounce_frames,
    }
    if profile.rules:
        evaluator["priority_rules"] = [
            {
                "when": rule.when,
                "disable": list(rule.disable),
                **({"except": list(rule.excepted)} if rule.excepted else {}),
            }
            for rule in profile.rules
        ]
    cursor_rec = {
        f.name: getattr(profile.cursor, f.name) for f in fields(CursorParams)
    }
    cursor_rec["mode_bindings"] = dict(profile.mode_bindings)
    return {
        "head_angles_center": center,
        "head_angles_scale": scale,
        "key_config": key_config,
        "expression_evaluator_config": evaluator,
        "cursor": cursor_rec,
    }


def save_profile(profile: Profile, path: str) -> None:
    """Write a profile; loading the result yields an equal Profile."""
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(
            profile_to_record(profile), fh, sort_keys=False, default_flow_style=False
        )


def validate_coverage(profile: Profile, required: list[str]) -> CoverageReport:
    """Report which required action tokens are reachable from the profile."""
    paths: dict[str, list[str]] = {}
    for mode, bindings in profile.keymaps.items():
        for owner, spec in bindings.items():
            for i, token in enumerate(spec.items):
                if token is None:
                    continue
                paths.setdefault(token, []).append(f"{mode}/{owner}[{i}]")
    reachable = {}
    missing = []
    for token in required:
        if token in paths:
            reachable[token] = tuple(paths[token])
        else:
            missing.append(token)
    return CoverageReport(reachable=reachable, missing=tuple(missing))
