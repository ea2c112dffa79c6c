"""Brute-force reference evaluator, independent of the package internals.

Reads a profile with generic YAML parsing and evaluates every condition
literally, dict-in dict-out.  Written before the engine-facing tests so
equivalence checks have a second, separately derived answer.
"""

from __future__ import annotations

import yaml


def load_raw_evaluator(path):
    """Return (expressions dict, priority-rule list) straight from the file."""
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    cfg = doc["expression_evaluator_config"]
    return cfg["expressions"], list(cfg.get("priority_rules", []))


def naive_condition(cond: dict, blend: dict) -> bool:
    value = blend[cond["feature"]]
    op = cond["operator"]
    if op == ">":
        return value > cond["threshold"]
    if op == "<":
        return value < cond["threshold"]
    if op == "BETWEEN":
        return cond["min"] <= value <= cond["max"]
    other = blend[cond["compare_to"]]
    if op == "DIFF>":
        return (value - other) > cond["threshold"]
    if op == "DIFF<":
        return abs(value - other) < cond["threshold"]
    raise ValueError(f"unknown operator {op!r}")


def naive_active(expressions: dict, blend: dict) -> set[str]:
    active = set()
    for name, spec in expressions.items():
        if all(naive_condition(c, blend) for c in spec["conditions"]):
            active.add(name)
    return active


def naive_priority(rules: list, active: set[str]) -> set[str]:
    """Declaration-order passes repeated until nothing changes."""
    current = set(active)
    while True:
        before = set(current)
        for rule in rules:
            excepted = set(rule.get("except", ()))
            if rule["when"] == "any":
                if current - excepted:
                    current -= set(rule["disable"])
            elif rule["when"] in current:
                current -= set(rule["disable"])
        if current == before:
            return current
