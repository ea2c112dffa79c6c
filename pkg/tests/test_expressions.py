"""Expression evaluation, priority filtering, and debounced edges."""

from __future__ import annotations

import itertools
import random

import pytest

from conftest import PROFILE_GAME
from naive_reference import (
    load_raw_evaluator,
    naive_active,
    naive_priority,
)

from facepilot.expressions import (
    ANY,
    Condition,
    IntentionEngine,
    IntentionSpec,
    PriorityRule,
    apply_priority_rules,
    eval_intentions,
)
from facepilot.frames import BLENDSHAPE_NAMES, BlendShapeVector


def cond(feature, operator, **kw):
    return Condition(feature=feature, operator=operator, **kw)


# -- single conditions ---------------------------------------------------------


def test_greater_than():
    c = cond("jawOpen", ">", threshold=0.4)
    assert c.evaluate(BlendShapeVector.zeros(jawOpen=0.5))
    assert not c.evaluate(BlendShapeVector.zeros(jawOpen=0.4))  # strict
    assert not c.evaluate(BlendShapeVector.zeros(jawOpen=0.3))


def test_less_than():
    c = cond("jawLeft", "<", threshold=0.1)
    assert c.evaluate(BlendShapeVector.zeros(jawLeft=0.05))
    assert not c.evaluate(BlendShapeVector.zeros(jawLeft=0.1))  # strict
    assert not c.evaluate(BlendShapeVector.zeros(jawLeft=0.2))


def test_zero_vector_fails_any_positive_threshold():
    zeros = BlendShapeVector.zeros()
    for feature in ("jawOpen", "mouthPucker", "browInnerUp"):
        assert not cond(feature, ">", threshold=0.2).evaluate(zeros)


def test_between_inclusive_bounds():
    c = cond("mouthSmileLeft", "BETWEEN", min_value=0.25, max_value=0.45)
    assert c.evaluate(BlendShapeVector.zeros(mouthSmileLeft=0.25))
    assert c.evaluate(BlendShapeVector.zeros(mouthSmileLeft=0.45))
    assert c.evaluate(BlendShapeVector.zeros(mouthSmileLeft=0.35))
    assert not c.evaluate(BlendShapeVector.zeros(mouthSmileLeft=0.2499))
    assert not c.evaluate(BlendShapeVector.zeros(mouthSmileLeft=0.4501))


def test_diff_greater_is_signed():
    c = cond("mouthSmileLeft", "DIFF>", threshold=0.15, compare_to="mouthSmileRight")
    assert c.evaluate(
        BlendShapeVector.zeros(mouthSmileLeft=0.30, mouthSmileRight=0.10)
    )  # 0.20 > 0.15
    # same gap the other way round: signed, so false
    assert not c.evaluate(
        BlendShapeVector.zeros(mouthSmileLeft=0.10, mouthSmileRight=0.30)
    )
    assert not c.evaluate(
        BlendShapeVector.zeros(mouthSmileLeft=0.30, mouthSmileRight=0.16)
    )


def test_diff_less_is_absolute():
    c = cond("mouthSmileLeft", "DIFF<", threshold=0.2, compare_to="mouthSmileRight")
    assert c.evaluate(BlendShapeVector.zeros(mouthSmileLeft=0.5, mouthSmileRight=0.4))
    assert c.evaluate(BlendShapeVector.zeros(mouthSmileLeft=0.4, mouthSmileRight=0.5))
    assert not c.evaluate(
        BlendShapeVector.zeros(mouthSmileLeft=0.7, mouthSmileRight=0.4)
    )
    assert not c.evaluate(
        BlendShapeVector.zeros(mouthSmileLeft=0.4, mouthSmileRight=0.7)
    )


def test_condition_validation():
    with pytest.raises(ValueError, match="blendshape"):
        cond("notAShape", ">", threshold=0.5).validate()
    with pytest.raises(ValueError, match="operator"):
        cond("jawOpen", ">=", threshold=0.5).validate()
    with pytest.raises(ValueError, match="min"):
        cond("jawOpen", "BETWEEN", min_value=0.5, max_value=0.2).validate()
    with pytest.raises(ValueError, match="compare_to"):
        cond("jawOpen", "DIFF>", threshold=0.1).validate()
    with pytest.raises(ValueError, match="compare_to"):
        cond("jawOpen", ">", threshold=0.1, compare_to="jawLeft").validate()
    with pytest.raises(ValueError, match="threshold"):
        cond("jawOpen", ">").validate()


# -- intention sets --------------------------------------------------------------


def jaw_specs():
    return (
        IntentionSpec(
            name="numlock",
            conditions=(
                cond("jawOpen", ">", threshold=0.4),
                cond("jawLeft", "<", threshold=0.1),
                cond("jawRight", "<", threshold=0.1),
            ),
        ),
        IntentionSpec(
            name="right_click", conditions=(cond("jawLeft", ">", threshold=0.3),)
        ),
        IntentionSpec(
            name="mid_click", conditions=(cond("jawRight", ">", threshold=0.3),)
        ),
    )


def test_open_jaw_activates_numlock_only():
    active = eval_intentions(
        jaw_specs(), BlendShapeVector.zeros(jawOpen=0.5, jawLeft=0.0, jawRight=0.0)
    )
    assert active == {"numlock"}


def test_sideways_jaw_is_distinguished_from_open_jaw():
    # open jaw with sideways drift is neither a clean open nor a full sideways
    active = eval_intentions(
        jaw_specs(), BlendShapeVector.zeros(jawOpen=0.5, jawLeft=0.2)
    )
    assert "numlock" not in active
    assert active == set()
    # a decisive sideways jaw reads as the sideways intention alone
    active = eval_intentions(
        jaw_specs(), BlendShapeVector.zeros(jawOpen=0.5, jawLeft=0.35)
    )
    assert active == {"right_click"}


def test_zero_vector_gives_empty_set():
    assert eval_intentions(jaw_specs(), BlendShapeVector.zeros()) == set()


def test_eval_matches_naive_reference_on_random_vectors():
    expressions, _ = load_raw_evaluator(PROFILE_GAME)
    from facepilot.profile import load_profile

    profile = load_profile(PROFILE_GAME)
    rng = random.Random(2024)
    thresholds = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.45, 0.5, 0.6, 0.8, 0.97]
    for _ in range(2000):
        values = {}
        for name in BLENDSHAPE_NAMES:
            if rng.random() < 0.5:
                # cluster near decision boundaries to stress comparisons
                base = rng.choice(thresholds)
                values[name] = min(1.0, max(0.0, base + rng.uniform(-0.02, 0.02)))
            else:
                values[name] = rng.random()
        blend = BlendShapeVector.from_mapping(values)
        assert eval_intentions(profile.intentions, blend) == naive_active(
            expressions, values
        )


# -- priority rules ---------------------------------------------------------------


def appendix_rules():
    return (
        PriorityRule(when="num7", disable=("num2",)),
        PriorityRule(when=ANY, disable=("left_click",), excepted=("left_click",)),
    )


def test_named_rule_disables_target():
    assert apply_priority_rules(appendix_rules(), {"num7", "num2"}) == {"num7"}


def test_except_escape_keeps_lone_intention():
    assert apply_priority_rules(appendix_rules(), {"left_click"}) == {"left_click"}


def test_any_rule_disables_when_another_is_active():
    assert apply_priority_rules(appendix_rules(), {"num8", "left_click"}) == {"num8"}


def test_rules_leave_unrelated_sets_alone():
    assert apply_priority_rules(appendix_rules(), {"num1", "num5"}) == {"num1", "num5"}
    assert apply_priority_rules(appendix_rules(), set()) == set()


def test_exhaustive_truth_table_and_idempotence():
    expressions, raw_rules = load_raw_evaluator(PROFILE_GAME)
    from facepilot.profile import load_profile

    profile = load_profile(PROFILE_GAME)
    names = sorted(expressions)
    assert len(names) == 15
    for r in range(len(names) + 1):
        for subset in itertools.combinations(names, r):
            active = set(subset)
            got = apply_priority_rules(profile.rules, active)
            assert got == naive_priority(raw_rules, active)
            assert apply_priority_rules(profile.rules, got) == got
            assert got <= active


def test_cascading_rules_reach_fixpoint():
    # disabling b retracts the trigger of the rule that disables c
    rules = (
        PriorityRule(when="a", disable=("b",)),
        PriorityRule(when="b", disable=("c",)),
    )
    # one declaration-order pass kills b then (b already gone) keeps c
    assert apply_priority_rules(rules, {"a", "b", "c"}) == {"a", "c"}
    # reversed declaration order: b kills c before a kills b
    rules_rev = (
        PriorityRule(when="b", disable=("c",)),
        PriorityRule(when="a", disable=("b",)),
    )
    assert apply_priority_rules(rules_rev, {"a", "b", "c"}) == {"a"}


def test_any_rule_with_only_excepted_active_does_nothing():
    rules = (PriorityRule(when=ANY, disable=("x",), excepted=("x", "y")),)
    assert apply_priority_rules(rules, {"x"}) == {"x"}
    assert apply_priority_rules(rules, {"x", "y"}) == {"x", "y"}
    assert apply_priority_rules(rules, {"x", "z"}) == {"z"}


# -- debounced engine ---------------------------------------------------------------


def pulse(engine: IntentionEngine, on: bool, n: int = 1):
    """Feed n frames of a numlock-style open jaw (or neutral) and collect edges."""
    out = []
    for _ in range(n):
        blend = BlendShapeVector.zeros(jawOpen=0.5 if on else 0.0)
        out.append(engine.step(blend))
    return out


def fresh_engine(debounce=2):
    return IntentionEngine(specs=jaw_specs(), rules=(), debounce_frames=debounce)


def test_rising_edge_on_second_agreeing_frame():
    engine = fresh_engine()
    first, second = pulse(engine, True, 2)
    assert set(first.risen) == set() and first.active == set()
    assert set(second.risen) == {"numlock"} and second.active == {"numlock"}


def test_alternating_frames_never_activate():
    engine = fresh_engine()
    for i in range(40):
        edges = engine.step(
            BlendShapeVector.zeros(jawOpen=0.5 if i % 2 == 0 else 0.0)
        )
        assert edges.risen == () and edges.fallen == ()
        assert edges.active == set()


def test_three_on_three_off_gives_one_edge_pair():
    engine = fresh_engine()
    rises, falls = [], []
    for i, edges in enumerate(pulse(engine, True, 3) + pulse(engine, False, 3)):
        rises += [(i, name) for name in edges.risen]
        falls += [(i, name) for name in edges.fallen]
    assert rises == [(1, "numlock")]
    assert falls == [(4, "numlock")]


def test_debounce_one_follows_raw_immediately():
    engine = fresh_engine(debounce=1)
    edges = engine.step(BlendShapeVector.zeros(jawOpen=0.5))
    assert set(edges.risen) == {"numlock"}
    edges = engine.step(BlendShapeVector.zeros())
    assert set(edges.fallen) == {"numlock"}


def test_interrupted_run_restarts_the_count():
    engine = fresh_engine(debounce=3)
    seq = [True, True, False, True, True, True]
    seen = []
    for on in seq:
        edges = engine.step(BlendShapeVector.zeros(jawOpen=0.5 if on else 0.0))
        seen.append(set(edges.risen))
    assert seen == [set(), set(), set(), set(), set(), {"numlock"}]


def test_edges_apply_post_priority():
    engine = IntentionEngine(
        specs=jaw_specs(),
        rules=(PriorityRule(when="right_click", disable=("mid_click",)),),
        debounce_frames=2,
    )
    blend = BlendShapeVector.zeros(jawLeft=0.4, jawRight=0.4)
    engine.step(blend)
    edges = engine.step(blend)
    assert set(edges.risen) == {"right_click"}
    assert edges.active == {"right_click"}


def test_raw_set_reported_alongside_filtered():
    engine = IntentionEngine(
        specs=jaw_specs(),
        rules=(PriorityRule(when="right_click", disable=("mid_click",)),),
        debounce_frames=1,
    )
    edges = engine.step(BlendShapeVector.zeros(jawLeft=0.4, jawRight=0.4))
    assert edges.raw == {"right_click", "mid_click"}
    assert edges.active == {"right_click"}


def test_reset_clears_state_without_edges():
    engine = fresh_engine()
    pulse(engine, True, 2)
    engine.reset()
    edges = engine.step(BlendShapeVector.zeros())
    assert edges.fallen == () and edges.active == set()
    # and activation needs the full debounce again
    first, second = pulse(engine, True, 2)
    assert set(first.risen) == set() and set(second.risen) == {"numlock"}


def test_edge_pairing_property_random_streams():
    """Rising and falling edges alternate per intention, starting with rising."""
    rng = random.Random(99)
    for trial in range(30):
        engine = IntentionEngine(
            specs=jaw_specs(), rules=(), debounce_frames=rng.choice((1, 2, 3))
        )
        history: dict[str, list[str]] = {}
        for _ in range(300):
            blend = BlendShapeVector.zeros(
                jawOpen=rng.random(), jawLeft=rng.random(), jawRight=rng.random()
            )
            edges = engine.step(blend)
            for name in edges.risen:
                history.setdefault(name, []).append("rise")
            for name in edges.fallen:
                history.setdefault(name, []).append("fall")
        for name, events in history.items():
            assert events[0] == "rise", name
            for a, b in zip(events, events[1:]):
                assert a != b, f"{name}: consecutive {a}"
