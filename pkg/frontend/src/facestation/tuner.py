"""Threshold tuner: live condition feedback plus safe profile edits.

Expression thresholds are personal — one user's deliberate jaw-open is
another's resting face — so the tuner shows, per intention, each
condition's current signal value against its threshold while the user
adjusts.  Evaluation goes through the engine package's own Condition
objects, so what the bars show is exactly what the engine will do.

Edits happen on the parsed YAML document.  Saving first revalidates the
whole serialized profile through the engine's loader; an invalid profile
is blocked with the validator's errors and the target file is left
untouched (write-temp + rename, never in-place).
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass

import yaml

from facepilot.expressions import Condition, PriorityRule, apply_priority_rules
from facepilot.frames import BlendShapeVector
from facepilot.profile import ConfigError, loads_profile


class TunerError(ValueError):
    """An edit or save was rejected; `errors` lists the validator output."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass(frozen=True)
class ConditionStatus:
    """One condition's live reading: the signal value and whether it passes."""

    feature: str
    operator: str
    value: float
    passed: bool
    detail: str


@dataclass(frozen=True)
class IntentionStatus:
    name: str
    active: bool  # all conditions pass (pre-priority)
    conditions: tuple[ConditionStatus, ...]


def _condition_from_record(record: dict) -> Condition:
    return Condition(
        feature=record.get("feature", ""),
        operator=record.get("operator", ""),
        threshold=record.get("threshold"),
        min_value=record.get("min"),
        max_value=record.get("max"),
        compare_to=record.get("compare_to"),
    )


def _describe(cond: Condition, blend: BlendShapeVector) -> str:
    value = blend[cond.feature]
    if cond.operator == "BETWEEN":
        return f"{cond.feature}={value:.3f} in [{cond.min_value}, {cond.max_value}]?"
    if cond.operator in ("DIFF>", "DIFF<"):
        other = blend[cond.compare_to]
        return (
            f"{cond.feature}-{cond.compare_to}={value - other:+.3f} "
            f"{cond.operator[-1]} {cond.threshold}?"
        )
    return f"{cond.feature}={value:.3f} {cond.operator} {cond.threshold}?"


class ThresholdTuner:
    """Load a profile, inspect and adjust conditions, save it validated."""

    def __init__(self, path: str):
        self.path = path
        with open(path, encoding="utf-8") as fh:
            self._data = yaml.safe_load(fh.read())
        if not isinstance(self._data, dict):
            raise TunerError([f"{path}: not a mapping"])
        errors = self.validate()
        if errors:
            raise TunerError(errors)

    # --- reading -----------------------------------------------------------

    def _expressions(self) -> dict:
        evaluator = self._data.get("expression_evaluator_config")
        if not isinstance(evaluator, dict) or not isinstance(
            evaluator.get("expressions"), dict
        ):
            raise TunerError(["profile has no expression section"])
        return evaluator["expressions"]

    @property
    def intention_names(self) -> tuple[str, ...]:
        return tuple(self._expressions())

    def conditions(self, intention: str) -> list[dict]:
        """The intention's condition records (copies; edit via set_*)."""
        spec = self._expressions().get(intention)
        if spec is None:
            raise TunerError([f"unknown intention {intention!r}"])
        return copy.deepcopy(spec.get("conditions", []))

    # --- live feedback -------------------------------------------------------

    def live_status(self, blend_values: dict[str, float]) -> dict[str, IntentionStatus]:
        """Evaluate every intention against one frame's blendshape values.

        Reflects the current edits, even unsaved ones, because that is the
        whole point of tuning; a structurally broken condition surfaces as
        a TunerError naming the problem.
        """
        vector = BlendShapeVector.zeros(**blend_values)
        status: dict[str, IntentionStatus] = {}
        for name, spec in self._expressions().items():
            cond_statuses = []
            for record in spec.get("conditions", []):
                cond = _condition_from_record(record)
                try:
                    cond.validate()
                except ValueError as exc:
                    raise TunerError([f"{name}: {exc}"]) from None
                passed = cond.evaluate(vector)
                cond_statuses.append(
                    ConditionStatus(
                        feature=cond.feature,
                        operator=cond.operator,
                        value=vector[cond.feature],
                        passed=passed,
                        detail=_describe(cond, vector),
                    )
                )
            status[name] = IntentionStatus(
                name=name,
                active=bool(cond_statuses) and all(c.passed for c in cond_statuses),
                conditions=tuple(cond_statuses),
            )
        return status

    def active_after_rules(self, blend_values: dict[str, float]) -> frozenset[str]:
        """The post-priority active set for one frame, as the engine sees it."""
        raw = {n for n, s in self.live_status(blend_values).items() if s.active}
        rules = []
        evaluator = self._data.get("expression_evaluator_config", {})
        for record in evaluator.get("priority_rules", []) or []:
            rules.append(
                PriorityRule(
                    when=record.get("when", ""),
                    disable=tuple(record.get("disable", [])),
                    excepted=tuple(record.get("except", [])),
                )
            )
        return apply_priority_rules(tuple(rules), raw)

    # --- editing -------------------------------------------------------------

    def _condition_record(self, intention: str, index: int) -> dict:
        spec = self._expressions().get(intention)
        if spec is None:
            raise TunerError([f"unknown intention {intention!r}"])
        conditions = spec.get("conditions", [])
        if not 0 <= index < len(conditions):
            raise TunerError(
                [f"{intention} has {len(conditions)} conditions, no index {index}"]
            )
        return conditions[index]

    def set_threshold(self, intention: str, index: int, value: float) -> None:
        record = self._condition_record(intention, index)
        if record.get("operator") == "BETWEEN":
            raise TunerError(
                [f"{intention}[{index}] is BETWEEN; use set_range(min, max)"]
            )
        record["threshold"] = float(value)

    def set_range(self, intention: str, index: int, min_value: float, max_value: float) -> None:
        record = self._condition_record(intention, index)
        if record.get("operator") != "BETWEEN":
            raise TunerError(
                [f"{intention}[{index}] is {record.get('operator')!r}; use set_threshold"]
            )
        record["min"] = float(min_value)
        record["max"] = float(max_value)

    # --- validation and saving -------------------------------------------------

    def serialize(self) -> str:
        return yaml.safe_dump(self._data, sort_keys=False, allow_unicode=True)

    def validate(self) -> list[str]:
        """The engine validator's verdict on the current edits."""
        try:
            loads_profile(self.serialize(), origin=self.path)
        except ConfigError as exc:
            return [str(exc)]
        return []

    def save(self, path: str | None = None) -> str:
        """Validate, then atomically write; returns the path written.

        Raises TunerError with the validator's error list when the current
        edits do not form a loadable profile; nothing is written then.
        """
        errors = self.validate()
        if errors:
            raise TunerError(errors)
        target = path or self.path
        tmp = target + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(self.serialize())
        os.replace(tmp, target)
        return target
