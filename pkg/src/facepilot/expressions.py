"""Boolean intention expressions over blendshapes, with debounce and priority.

An intention is a named AND-combination of threshold conditions on the 52
blendshape activations.  Raw per-frame activations pass through declarative
priority rules (mutual exclusion), then a consecutive-frame debounce turns
the filtered activations into rising/falling edges that downstream consumers
(wheels, direct key triggers) act on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .frames import BLENDSHAPE_INDEX, BlendShapeVector

OPERATORS = (">", "<", "BETWEEN", "DIFF>", "DIFF<")
DEFAULT_DEBOUNCE_FRAMES = 2

# Fires whenever any intention outside its except-list is active.
ANY = "any"


@dataclass(frozen=True)
class Condition:
    """One threshold test on a blendshape.

    Operators: ">" and "<" are strict comparisons against `threshold`;
    "BETWEEN" is inclusive on both `min_value` and `max_value`; "DIFF>" is a
    strict signed test (value - compare_to) > threshold; "DIFF<" is a strict
    absolute test |value - compare_to| < threshold.
    """

    feature: str
    operator: str
    threshold: float | None = None
    min_value: float | None = None
    max_value: float | None = None
    compare_to: str | None = None

    def validate(self) -> None:
        if self.feature not in BLENDSHAPE_INDEX:
            raise ValueError(f"unknown blendshape {self.feature!r}")
        if self.operator not in OPERATORS:
            raise ValueError(f"invalid operator {self.operator!r}")
        if self.operator == "BETWEEN":
            if self.min_value is None or self.max_value is None:
                raise ValueError("BETWEEN requires min and max")
            if not self.min_value < self.max_value:
                raise ValueError("BETWEEN requires min < max")
        else:
            if self.threshold is None:
                raise ValueError(f"{self.operator} requires a threshold")
        if self.operator in ("DIFF>", "DIFF<"):
            if self.compare_to is None:
                raise ValueError(f"{self.operator} requires compare_to")
            if self.compare_to not in BLENDSHAPE_INDEX:
                raise ValueError(f"unknown blendshape {self.compare_to!r}")
        elif self.compare_to is not None:
            raise ValueError(f"compare_to is only valid with DIFF operators")

    def evaluate(self, blend: BlendShapeVector) -> bool:
        v = blend[self.feature]
        if self.operator == ">":
            return v > self.threshold
        if self.operator == "<":
            return v < self.threshold
        if self.operator == "BETWEEN":
            return self.min_value <= v <= self.max_value
        other = blend[self.compare_to]
        if self.operator == "DIFF>":
            return (v - other) > self.threshold
        return abs(v - other) < self.threshold


@dataclass(frozen=True)
class IntentionSpec:
    """A named intention: all conditions must hold (AND combine)."""

    name: str
    conditions: tuple[Condition, ...]
    combine: str = "AND"

    def validate(self) -> None:
        if self.combine != "AND":
            raise ValueError(f"unsupported combine {self.combine!r}")
        if not self.conditions:
            raise ValueError(f"intention {self.name!r} has no conditions")
        for cond in self.conditions:
            cond.validate()

    def evaluate(self, blend: BlendShapeVector) -> bool:
        return all(cond.evaluate(blend) for cond in self.conditions)


@dataclass(frozen=True)
class PriorityRule:
    """When `when` is active, drop every intention listed in `disable`.

    `when` may be an intention name or "any": the rule then fires whenever
    any intention outside `excepted` is active.  The except list gates only
    the trigger, which is what keeps an intention from disabling itself.
    """

    when: str
    disable: tuple[str, ...]
    excepted: tuple[str, ...] = ()


def eval_intentions(
    specs: tuple[IntentionSpec, ...], blend: BlendShapeVector
) -> set[str]:
    """Raw activation set: every intention whose expression holds this frame."""
    return {spec.name for spec in specs if spec.evaluate(blend)}


def _one_pass(rules: tuple[PriorityRule, ...], active: set[str]) -> set[str]:
    current = set(active)
    for rule in rules:
        if rule.when == ANY:
            if current - set(rule.excepted):
                current -= set(rule.disable)
        elif rule.when in current:
            current -= set(rule.disable)
    return current


def apply_priority_rules(
    rules: tuple[PriorityRule, ...], active: set[str]
) -> set[str]:
    """Filter an activation set through the rules to a fixpoint.

    Rules are applied in declaration order; because one rule's disable can
    retract another rule's trigger, passes repeat until nothing changes.
    Each pass removes at least one intention, so at most len(active) + 1
    passes run.  The result is idempotent: filtering twice equals once.
    """
    current = set(active)
    for _ in range(len(active) + 1):
        nxt = _one_pass(rules, current)
        if nxt == current:
            return nxt
        current = nxt
    return current


@dataclass(frozen=True)
class IntentionEdges:
    """Per-frame debounced output: edges this frame plus the stable set.

    `raw` is the pre-priority, pre-debounce evaluation of this frame,
    kept for diagnostics; `active` is what downstream logic should act on.
    """

    risen: tuple[str, ...]
    fallen: tuple[str, ...]
    active: frozenset[str]
    raw: frozenset[str]


@dataclass
class _DebounceState:
    stable: bool = False
    streak: int = 0


class IntentionEngine:
    """Evaluates intentions each frame and debounces their on/off state.

    A stable state flips only after `debounce_frames` consecutive frames of
    the opposite raw (post-priority) value; the edge is reported on the
    frame that completes the run.  Frames that agree with the stable state
    reset the disagreement streak, so alternating inputs never flip.
    """

    def __init__(
        self,
        specs: tuple[IntentionSpec, ...],
        rules: tuple[PriorityRule, ...] = (),
        debounce_frames: int = DEFAULT_DEBOUNCE_FRAMES,
    ):
        if debounce_frames < 1:
            raise ValueError("debounce_frames must be >= 1")
        self.specs = tuple(specs)
        self.rules = tuple(rules)
        self.debounce_frames = debounce_frames
        self._states: dict[str, _DebounceState] = {}
        self.reset()

    def reset(self) -> None:
        """Back to idle: everything off, all streaks cleared."""
        self._states = {spec.name: _DebounceState() for spec in self.specs}

    @property
    def active(self) -> frozenset[str]:
        return frozenset(n for n, s in self._states.items() if s.stable)

    def step(self, blend: BlendShapeVector) -> IntentionEdges:
        observed_raw = eval_intentions(self.specs, blend)
        raw = apply_priority_rules(self.rules, observed_raw)
        risen: list[str] = []
        fallen: list[str] = []
        for spec in self.specs:
            state = self._states[spec.name]
            observed = spec.name in raw
            if observed == state.stable:
                state.streak = 0
                continue
            state.streak += 1
            if state.streak >= self.debounce_frames:
                state.stable = observed
                state.streak = 0
                (risen if observed else fallen).append(spec.name)
        return IntentionEdges(
            risen=tuple(risen),
            fallen=tuple(fallen),
            active=self.active,
            raw=frozenset(observed_raw),
        )
