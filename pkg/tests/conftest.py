"""Shared builders and fixtures."""

from __future__ import annotations

import os

import pytest

from facepilot.frames import (
    BlendShapeVector,
    FaceBox,
    FeatureFrame,
    GazeAngles,
    HeadPose,
)
from facepilot.profile import load_profile

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
PROFILE_GAME = os.path.join(REPO_ROOT, "profiles", "game.yaml")
PROFILE_DESKTOP = os.path.join(REPO_ROOT, "profiles", "desktop.yaml")
GOLDEN_DIR = os.path.join(REPO_ROOT, "goldens")
MODEL_FIXTURE = os.path.join(GOLDEN_DIR, "calibration_model.json")

NEUTRAL_PITCH = 3.0  # the configured pitch center in the shipped profiles


def make_frame(
    t_ms: int,
    yaw: float = 0.0,
    pitch: float = NEUTRAL_PITCH,
    roll: float = 0.0,
    gaze_yaw: float = 0.0,
    gaze_pitch: float = 0.0,
    box: tuple[float, float, float, float] = (0.3, 0.3, 0.7, 0.7),
    **blend: float,
) -> FeatureFrame:
    return FeatureFrame(
        t_ms=t_ms,
        face_present=True,
        blend=BlendShapeVector.zeros(**blend),
        head=HeadPose(yaw=yaw, pitch=pitch, roll=roll),
        gaze=GazeAngles(yaw=gaze_yaw, pitch=gaze_pitch),
        box=FaceBox(*box),
    )


def absent_frame(t_ms: int) -> FeatureFrame:
    return FeatureFrame(t_ms=t_ms, face_present=False)


@pytest.fixture(scope="session")
def game_profile():
    return load_profile(PROFILE_GAME)


@pytest.fixture(scope="session")
def desktop_profile():
    return load_profile(PROFILE_DESKTOP)


@pytest.fixture(scope="session")
def linear_model():
    """The committed test model: x = 40*gaze_yaw + 960, y = -35*gaze_pitch + 540."""
    from facepilot.calibration import load_model

    return load_model(MODEL_FIXTURE)
