"""Threshold tuner: live status, validated edits, and the save round-trip.

The round-trip test is the contract that matters most: a profile the
tuner saves must load in the engine with evaluator behaviour identical to
the original on a fixture of frames clustered around every threshold.
"""

import random

import pytest

import facepilot.cli
from facepilot.expressions import apply_priority_rules, eval_intentions
from facepilot.frames import BLENDSHAPE_NAMES, BlendShapeVector
from facepilot.profile import load_profile

from facestation.tuner import ThresholdTuner, TunerError

from conftest import ENGINE_PROFILE

# Activation levels clustered around the thresholds the bundled profile
# uses, so round-trip comparisons exercise both sides of every boundary.
LEVELS = (0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.45, 0.5, 0.6, 0.8, 0.97, 0.99, 1.0)


def fixture_blend_vectors(n=60, seed=77) -> list[BlendShapeVector]:
    rng = random.Random(seed)
    vectors = []
    for _ in range(n):
        overrides = {}
        for name in rng.sample(BLENDSHAPE_NAMES, k=rng.randint(2, 10)):
            if name == "_neutral":
                continue
            overrides[name] = rng.choice(LEVELS)
        vectors.append(BlendShapeVector.zeros(**overrides))
    return vectors


def active_sets(profile, vectors):
    out = []
    for vector in vectors:
        raw = eval_intentions(profile.intentions, vector)
        out.append(apply_priority_rules(profile.rules, raw))
    return out


# --- the save round-trip --------------------------------------------------------


def test_saved_profile_keeps_identical_evaluator_behavior(tmp_path):
    tuner = ThresholdTuner(ENGINE_PROFILE)
    saved_path = tuner.save(str(tmp_path / "roundtrip.yaml"))

    original = load_profile(ENGINE_PROFILE)
    saved = load_profile(saved_path)
    assert saved.intentions == original.intentions
    assert saved.rules == original.rules

    vectors = fixture_blend_vectors()
    assert active_sets(saved, vectors) == active_sets(original, vectors)


def test_saved_profile_passes_engine_check_config(tmp_path, capsys):
    tuner = ThresholdTuner(ENGINE_PROFILE)
    saved_path = tuner.save(str(tmp_path / "saved.yaml"))
    code = facepilot.cli.main(
        ["check-config", saved_path, "--require-keys", "space,w,a,s,d,mouse_left"]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "all 6 required keys reachable" in captured.out


def test_edited_threshold_changes_engine_behavior(tmp_path):
    tuner = ThresholdTuner(ENGINE_PROFILE)
    tuner.set_threshold("numlock", 0, 0.45)
    saved_path = tuner.save(str(tmp_path / "edited.yaml"))

    vector = BlendShapeVector.zeros(jawOpen=0.42)
    original = load_profile(ENGINE_PROFILE)
    edited = load_profile(saved_path)
    assert "numlock" in eval_intentions(original.intentions, vector)  # 0.42 > 0.40
    assert "numlock" not in eval_intentions(edited.intentions, vector)  # not > 0.45


# --- live status ------------------------------------------------------------------


def test_live_status_shows_condition_level_detail():
    tuner = ThresholdTuner(ENGINE_PROFILE)
    status = tuner.live_status({"jawOpen": 0.5})
    numlock = status["numlock"]
    assert numlock.active
    assert [c.passed for c in numlock.conditions] == [True, True, True]
    assert numlock.conditions[0].value == 0.5
    assert "jawOpen=0.500 > 0.4?" in numlock.conditions[0].detail

    status = tuner.live_status({"jawOpen": 0.3})
    assert not status["numlock"].active
    assert status["numlock"].conditions[0].passed is False


def test_live_status_reflects_unsaved_edits():
    tuner = ThresholdTuner(ENGINE_PROFILE)
    assert tuner.live_status({"jawOpen": 0.5})["numlock"].active
    tuner.set_threshold("numlock", 0, 0.6)
    assert not tuner.live_status({"jawOpen": 0.5})["numlock"].active


def test_active_after_rules_applies_engine_priority():
    tuner = ThresholdTuner(ENGINE_PROFILE)
    blend = {
        "mouthUpperUpLeft": 0.6,
        "mouthUpperUpRight": 0.6,
        "mouthLowerDownLeft": 0.4,
        "mouthLowerDownRight": 0.4,
        "mouthSmileLeft": 0.5,
        "mouthSmileRight": 0.5,
    }
    status = tuner.live_status(blend)
    assert status["num7"].active and status["num2"].active
    assert tuner.active_after_rules(blend) == {"num7"}  # num7 suppresses num2

    blend = {"mouthPucker": 0.98, "jawOpen": 0.5}
    status = tuner.live_status(blend)
    assert status["left_click"].active and status["numlock"].active
    assert tuner.active_after_rules(blend) == {"numlock"}


# --- edit validation ----------------------------------------------------------------


def test_reversed_between_range_blocks_save(tmp_path):
    tuner = ThresholdTuner(ENGINE_PROFILE)
    tuner.set_range("num1", 0, 0.5, 0.3)
    target = tmp_path / "broken.yaml"
    with pytest.raises(TunerError, match="min"):
        tuner.save(str(target))
    assert not target.exists()
    assert tuner.validate()  # the error list is non-empty


def test_failed_save_leaves_existing_file_untouched(tmp_path):
    target = tmp_path / "profile.yaml"
    tuner = ThresholdTuner(ENGINE_PROFILE)
    tuner.save(str(target))
    before = target.read_bytes()

    tuner.set_range("num1", 0, 0.9, 0.1)
    with pytest.raises(TunerError):
        tuner.save(str(target))
    assert target.read_bytes() == before
    assert not (tmp_path / "profile.yaml.tmp").exists()


def test_set_threshold_rejects_between_conditions():
    tuner = ThresholdTuner(ENGINE_PROFILE)
    with pytest.raises(TunerError, match="BETWEEN"):
        tuner.set_threshold("num1", 0, 0.5)  # num1[0] is a BETWEEN condition


def test_set_range_rejects_scalar_conditions():
    tuner = ThresholdTuner(ENGINE_PROFILE)
    with pytest.raises(TunerError, match="set_threshold"):
        tuner.set_range("numlock", 0, 0.1, 0.5)


def test_unknown_intention_and_index_rejected():
    tuner = ThresholdTuner(ENGINE_PROFILE)
    with pytest.raises(TunerError, match="unknown intention"):
        tuner.set_threshold("wiggle", 0, 0.5)
    with pytest.raises(TunerError, match="no index"):
        tuner.set_threshold("numlock", 9, 0.5)


def test_loading_a_broken_profile_fails_up_front(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("just a string", encoding="utf-8")
    with pytest.raises(TunerError):
        ThresholdTuner(str(bad))


def test_conditions_view_returns_copies():
    tuner = ThresholdTuner(ENGINE_PROFILE)
    view = tuner.conditions("numlock")
    view[0]["threshold"] = 0.99
    assert tuner.conditions("numlock")[0]["threshold"] == 0.4


# --- the tune CLI ----------------------------------------------------------------


def test_tune_cli_edits_and_saves(tmp_path, capsys):
    from facestation.cli import main

    out = tmp_path / "tuned.yaml"
    code = main(
        [
            "tune",
            "--profile",
            ENGINE_PROFILE,
            "--set",
            "numlock.0.threshold=0.55",
            "--save-as",
            str(out),
        ]
    )
    captured = capsys.readouterr()
    assert code == 0 and "saved" in captured.err
    profile = load_profile(str(out))
    spec = next(i for i in profile.intentions if i.name == "numlock")
    assert spec.conditions[0].threshold == 0.55


def test_tune_cli_status_report(tmp_path, capsys):
    import json

    from facestation.cli import main

    blend_file = tmp_path / "blend.json"
    blend_file.write_text(json.dumps({"jawOpen": 0.6}), encoding="utf-8")
    code = main(
        ["tune", "--profile", ENGINE_PROFILE, "--status-blend", str(blend_file)]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "ACTIVE numlock" in captured.out
    assert "[+] jawOpen=0.600 > 0.4?" in captured.out


def test_tune_cli_blocks_invalid_range(tmp_path, capsys):
    from facestation.cli import main

    out = tmp_path / "never.yaml"
    code = main(
        [
            "tune",
            "--profile",
            ENGINE_PROFILE,
            "--set",
            "num1.0.min=0.5",
            "--set",
            "num1.0.max=0.3",
            "--save-as",
            str(out),
        ]
    )
    captured = capsys.readouterr()
    assert code == 1
    assert "error:" in captured.err
    assert not out.exists()
