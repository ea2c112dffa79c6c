"""Report figures: visual summaries rendered next to the delimited outputs.

Replay reports chart the event stream (kind timeline plus cursor motion);
calibration reports chart the cross-validation curve, the per-axis
coefficients, and fit quality on the training samples.  Everything renders
headless through the Agg backend and lands as PNG files in the report
directory.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .calibration import (
    CalibrationModel,
    CalibrationSample,
    N_FEATURES,
    predict_gaze_point,
)
from .engine import EventLog

FEATURE_LABELS = ("gaze yaw", "gaze pitch", "box x0", "box y0", "box x1", "box y1")

plt.rcParams.update(
    {
        "figure.figsize": (8.0, 4.5),
        "figure.dpi": 110,
        "axes.grid": True,
        "grid.alpha": 0.3,
    }
)


def _save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def render_replay_report(log: EventLog, out_dir: str) -> list[str]:
    """Write event-timeline and cursor-path figures for one replay."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    events = log.input_events()
    kinds = sorted({e.kind for e in events})
    fig, ax = plt.subplots()
    if kinds:
        lane = {k: i for i, k in enumerate(kinds)}
        ax.scatter(
            [e.t_ms for e in events],
            [lane[e.kind] for e in events],
            s=12,
            alpha=0.7,
        )
        ax.set_yticks(range(len(kinds)), kinds)
    else:
        ax.text(0.5, 0.5, "no events", ha="center", va="center")
    ax.set_xlabel("t_ms")
    ax.set_title("event timeline")
    written.append(_save(fig, os.path.join(out_dir, "events_timeline.png")))

    fig, ax = plt.subplots()
    abs_moves = [e for e in events if e.kind == "mouse_move_abs"]
    rel_moves = [e for e in events if e.kind == "mouse_move_rel"]
    if abs_moves:
        xs = [e.payload["x"] for e in abs_moves]
        ys = [e.payload["y"] for e in abs_moves]
        ax.plot(xs, ys, marker="o", markersize=3, linewidth=1)
        ax.invert_yaxis()
        ax.set_xlabel("x (px)")
        ax.set_ylabel("y (px)")
        ax.set_title("cursor path (absolute)")
    elif rel_moves:
        xs = np.cumsum([e.payload["dx"] for e in rel_moves])
        ys = np.cumsum([e.payload["dy"] for e in rel_moves])
        ax.plot(xs, ys, marker="o", markersize=3, linewidth=1)
        ax.invert_yaxis()
        ax.set_xlabel("accumulated dx (px)")
        ax.set_ylabel("accumulated dy (px)")
        ax.set_title("cursor path (relative, accumulated)")
    else:
        ax.text(0.5, 0.5, "no cursor motion", ha="center", va="center")
        ax.set_title("cursor path")
    written.append(_save(fig, os.path.join(out_dir, "cursor_path.png")))
    return written


def render_calibration_report(
    model: CalibrationModel,
    samples: list[CalibrationSample],
    cv_scores: dict[float, float],
    out_dir: str,
) -> list[str]:
    """Write CV-curve, coefficient, and fit-quality figures for one fit."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    fig, ax = plt.subplots()
    lams = sorted(cv_scores)
    ax.plot(lams, [cv_scores[l] for l in lams], marker="o")
    ax.axvline(model.lam, color="tab:red", linestyle="--", label=f"chosen {model.lam:.4g}")
    ax.set_xscale("log")
    ax.set_xlabel("lambda")
    ax.set_ylabel("CV mean squared error (px^2)")
    ax.set_title("cross-validation curve")
    ax.legend()
    written.append(_save(fig, os.path.join(out_dir, "cv_curve.png")))

    fig, ax = plt.subplots()
    idx = np.arange(N_FEATURES)
    width = 0.4
    ax.bar(idx - width / 2, model.coef_x, width, label="x axis")
    ax.bar(idx + width / 2, model.coef_y, width, label="y axis")
    ax.set_xticks(idx, FEATURE_LABELS, rotation=20)
    ax.set_ylabel("coefficient (standardized units)")
    ax.set_title("model coefficients")
    ax.legend()
    written.append(_save(fig, os.path.join(out_dir, "coefficients.png")))

    fig, ax = plt.subplots()
    preds = [
        predict_gaze_point(
            model, s.gaze, s.box, s.target.screen_w, s.target.screen_h
        )
        for s in samples
    ]
    ax.scatter(
        [s.target.x for s in samples],
        [s.target.y for s in samples],
        marker="x",
        label="targets",
    )
    ax.scatter([p.x for p in preds], [p.y for p in preds], s=14, label="predictions")
    for s, p in zip(samples, preds):
        ax.plot([s.target.x, p.x], [s.target.y, p.y], color="gray", alpha=0.4, linewidth=0.7)
    ax.invert_yaxis()
    ax.set_xlabel("x (px)")
    ax.set_ylabel("y (px)")
    ax.set_title("fit on training samples")
    ax.legend()
    written.append(_save(fig, os.path.join(out_dir, "fit_quality.png")))
    return written
