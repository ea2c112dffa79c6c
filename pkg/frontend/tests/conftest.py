"""Shared paths and helpers for the station tests.

The engine package (facepilot) is a real installed dependency here; these
tests exercise the station against the engine's actual public surfaces —
decoder, profile loader, calibrate command — not against copies.
"""

import os
import sys

import pytest

TESTS_DIR = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, TESTS_DIR)  # for fixture_gen and cross-test imports

FRONTEND_ROOT = os.path.dirname(TESTS_DIR)
WORKSPACE_ROOT = os.path.dirname(FRONTEND_ROOT)
ENGINE_PROFILE = os.path.join(WORKSPACE_ROOT, "profiles", "game.yaml")
ENGINE_MODEL = os.path.join(WORKSPACE_ROOT, "goldens", "calibration_model.json")
ENGINE_TRACE = os.path.join(WORKSPACE_ROOT, "traces", "scenario_wheel_skill.jsonl")

FIXTURE_DIR = os.path.join(TESTS_DIR, "fixtures")
CODEC_FIXTURE = os.path.join(FIXTURE_DIR, "codec_frames.jsonl")
NEUTRAL_CLIP = os.path.join(FIXTURE_DIR, "neutral_clip.jsonl")


def read_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


@pytest.fixture(scope="session")
def codec_fixture_lines() -> list[str]:
    return read_lines(CODEC_FIXTURE)


@pytest.fixture(scope="session")
def neutral_clip_lines_committed() -> list[str]:
    return read_lines(NEUTRAL_CLIP)
