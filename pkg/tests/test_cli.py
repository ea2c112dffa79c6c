"""CLI behaviour: exit codes, golden comparison, reports, and subcommands.

Everything drives `cli.main(argv)` in-process so stdout/stderr and exit
codes are observable without spawning subprocesses.
"""

import io
import json
import os

import numpy as np
import pytest

from facepilot import calibration, cli
from facepilot.engine import replay_trace
from facepilot.frames import encode_frame

from conftest import GOLDEN_DIR, MODEL_FIXTURE, PROFILE_GAME, REPO_ROOT, make_frame
from test_calibration import synthetic_samples

TRACE_WHEEL = os.path.join(REPO_ROOT, "traces", "scenario_wheel_skill.jsonl")
GOLDEN_WHEEL = os.path.join(GOLDEN_DIR, "scenario_wheel_skill.log")


def read_lines(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


# --- replay ---------------------------------------------------------------


def test_replay_golden_match_exits_zero(tmp_path, capsys):
    log_path = str(tmp_path / "out.log")
    code = cli.main(
        [
            "replay",
            "--profile",
            PROFILE_GAME,
            "--trace",
            TRACE_WHEEL,
            "--model",
            MODEL_FIXTURE,
            "--golden",
            GOLDEN_WHEEL,
            "--log",
            log_path,
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "golden match" in captured.err
    assert read_lines(log_path) == read_lines(GOLDEN_WHEEL)


def test_replay_without_log_prints_events(capsys):
    code = cli.main(
        [
            "replay",
            "--profile",
            PROFILE_GAME,
            "--trace",
            TRACE_WHEEL,
            "--model",
            MODEL_FIXTURE,
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert captured.out.splitlines() == read_lines(GOLDEN_WHEEL)
    assert "replayed 10 frames, 0 bad lines" in captured.err


def test_replay_golden_mismatch_exits_three(tmp_path, capsys):
    golden = read_lines(GOLDEN_WHEEL)
    tampered = tmp_path / "tampered.log"
    tampered.write_text(golden[0].replace('"2"', '"3"') + "\n", encoding="utf-8")
    code = cli.main(
        [
            "replay",
            "--profile",
            PROFILE_GAME,
            "--trace",
            TRACE_WHEEL,
            "--model",
            MODEL_FIXTURE,
            "--golden",
            str(tampered),
        ]
    )
    captured = capsys.readouterr()
    assert code == 3
    assert "golden mismatch at line 1" in captured.err
    assert "got:" in captured.err and "want:" in captured.err


def test_replay_golden_length_mismatch_exits_three(tmp_path, capsys):
    longer = tmp_path / "longer.log"
    longer.write_text(
        "\n".join(read_lines(GOLDEN_WHEEL) + ['9999\tkey_press\t{"key":"z"}']) + "\n",
        encoding="utf-8",
    )
    code = cli.main(
        [
            "replay",
            "--profile",
            PROFILE_GAME,
            "--trace",
            TRACE_WHEEL,
            "--model",
            MODEL_FIXTURE,
            "--golden",
            str(longer),
        ]
    )
    captured = capsys.readouterr()
    assert code == 3
    assert "1 lines vs 2 expected" in captured.err


def test_replay_missing_profile_exits_one(tmp_path, capsys):
    code = cli.main(
        ["replay", "--profile", str(tmp_path / "nope.yaml"), "--trace", TRACE_WHEEL]
    )
    captured = capsys.readouterr()
    assert code == 1
    assert captured.err.startswith("error:")


def test_replay_invalid_profile_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("definitely: [not, a, profile]\n", encoding="utf-8")
    code = cli.main(["replay", "--profile", str(bad), "--trace", TRACE_WHEEL])
    captured = capsys.readouterr()
    assert code == 1
    assert "error:" in captured.err


def test_replay_missing_trace_exits_two(tmp_path, capsys):
    code = cli.main(
        ["replay", "--profile", PROFILE_GAME, "--trace", str(tmp_path / "no.jsonl")]
    )
    captured = capsys.readouterr()
    assert code == 2
    assert "error:" in captured.err


def test_replay_missing_golden_file_exits_two(tmp_path, capsys):
    code = cli.main(
        [
            "replay",
            "--profile",
            PROFILE_GAME,
            "--trace",
            TRACE_WHEEL,
            "--golden",
            str(tmp_path / "no.log"),
        ]
    )
    captured = capsys.readouterr()
    assert code == 2
    assert "error:" in captured.err


def test_replay_report_renders_figures(tmp_path, capsys):
    report_dir = tmp_path / "report"
    code = cli.main(
        [
            "replay",
            "--profile",
            PROFILE_GAME,
            "--trace",
            TRACE_WHEEL,
            "--model",
            MODEL_FIXTURE,
            "--log",
            str(tmp_path / "out.log"),
            "--report",
            str(report_dir),
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    for name in ("events_timeline.png", "cursor_path.png"):
        path = report_dir / name
        assert path.is_file(), name
        assert path.stat().st_size > 1000, name
        assert f"report: {path}" in captured.err


def test_replay_ui_log_writes_one_snapshot_per_frame(tmp_path, capsys):
    ui_path = tmp_path / "snapshots.jsonl"
    code = cli.main(
        [
            "replay",
            "--profile",
            PROFILE_GAME,
            "--trace",
            TRACE_WHEEL,
            "--model",
            MODEL_FIXTURE,
            "--log",
            str(tmp_path / "out.log"),
            "--ui-log",
            str(ui_path),
        ]
    )
    capsys.readouterr()
    assert code == 0
    snaps = [json.loads(line) for line in read_lines(str(ui_path))]
    assert len(snaps) == 10
    for snap in snaps:
        assert {"t_ms", "mode", "active", "held", "wheel"} <= set(snap)


def test_replay_screen_argument_changes_absolute_coordinates(tmp_path):
    # Same trace and model on a half-size screen lands on scaled centers.
    trace = tmp_path / "look.jsonl"
    frames = [make_frame(33 * i) for i in range(8)]
    trace.write_text(
        "".join(encode_frame(f) + "\n" for f in frames), encoding="utf-8"
    )
    big = tmp_path / "big.log"
    small = tmp_path / "small.log"
    for screen, path in (("1920x1080", big), ("960x540", small)):
        code = cli.main(
            [
                "replay",
                "--profile",
                os.path.join(REPO_ROOT, "profiles", "desktop.yaml"),
                "--trace",
                str(trace),
                "--model",
                MODEL_FIXTURE,
                "--screen",
                screen,
                "--log",
                str(path),
            ]
        )
        assert code == 0
    # Neutral gaze with the fixture model maps to the model intercept
    # (960, 540); the smaller screen clamps x to its right edge.
    assert '{"x":960,"y":540}' in "\n".join(read_lines(str(big)))
    assert '{"x":959,"y":539}' in "\n".join(read_lines(str(small)))


def test_screen_argument_rejects_garbage():
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(
            ["replay", "--profile", "p", "--trace", "t", "--screen", "banana"]
        )


def test_main_requires_subcommand():
    with pytest.raises(SystemExit):
        cli.main([])


# --- check-config ----------------------------------------------------------


def test_check_config_reports_profile_summary(capsys):
    code = cli.main(["check-config", PROFILE_GAME])
    captured = capsys.readouterr()
    assert code == 0
    assert captured.out.startswith("profile ok:")
    assert "intentions=15" in captured.out
    assert "rules=2" in captured.out


def test_check_config_missing_key_exits_one(capsys):
    code = cli.main(
        ["check-config", PROFILE_GAME, "--require-keys", "1,2,warpdrive"]
    )
    captured = capsys.readouterr()
    assert code == 1
    assert "MISSING: warpdrive" in captured.out
    assert "reachable: 1 via " in captured.out
    assert "1 required keys unreachable" in captured.err


def test_check_config_bad_profile_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("just some text", encoding="utf-8")
    code = cli.main(["check-config", str(bad)])
    captured = capsys.readouterr()
    assert code == 1
    assert "error:" in captured.err


# --- calibrate --------------------------------------------------------------


def write_sample_file(path, n=27, noise_deg=0.5, complete=True, seed=7):
    rng = np.random.default_rng(seed)
    samples = synthetic_samples(rng, n, noise_deg=noise_deg)
    calibration.write_samples(samples, str(path), complete=complete)
    return samples


def test_calibrate_writes_model_file(tmp_path, capsys):
    samples_path = tmp_path / "samples.jsonl"
    model_path = tmp_path / "model.json"
    write_sample_file(samples_path)
    code = cli.main(
        ["calibrate", "--samples", str(samples_path), "--out", str(model_path)]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "fitted 27 samples" in captured.err
    with open(model_path, encoding="utf-8") as fh:
        raw = json.load(fh)
    assert set(raw) == {
        "coef_x",
        "coef_y",
        "intercept_x",
        "intercept_y",
        "feat_mean",
        "feat_std",
        "lambda",
        "cv_mse",
    }
    model = calibration.load_model(str(model_path))
    # The fitted model must track the synthetic map it was trained on.
    point = calibration.predict_gaze_point(
        model, make_frame(0, gaze_yaw=10.0).gaze, make_frame(0).box, 1920, 1080
    )
    assert abs(point.x - (40.0 * 10.0 + 960.0)) < 40.0


def test_calibrate_report_renders_figures(tmp_path, capsys):
    samples_path = tmp_path / "samples.jsonl"
    report_dir = tmp_path / "report"
    write_sample_file(samples_path)
    code = cli.main(
        [
            "calibrate",
            "--samples",
            str(samples_path),
            "--out",
            str(tmp_path / "model.json"),
            "--report",
            str(report_dir),
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    for name in ("cv_curve.png", "coefficients.png", "fit_quality.png"):
        path = report_dir / name
        assert path.is_file(), name
        assert path.stat().st_size > 1000, name
        assert f"report: {path}" in captured.err


def test_calibrate_aborted_samples_exit_one(tmp_path, capsys):
    samples_path = tmp_path / "samples.jsonl"
    write_sample_file(samples_path, complete=False)
    code = cli.main(
        [
            "calibrate",
            "--samples",
            str(samples_path),
            "--out",
            str(tmp_path / "model.json"),
        ]
    )
    captured = capsys.readouterr()
    assert code == 1
    assert "aborted" in captured.err
    assert not (tmp_path / "model.json").exists()


def test_calibrate_missing_samples_file_exits_one(tmp_path, capsys):
    code = cli.main(
        [
            "calibrate",
            "--samples",
            str(tmp_path / "none.jsonl"),
            "--out",
            str(tmp_path / "model.json"),
        ]
    )
    captured = capsys.readouterr()
    assert code == 1
    assert "error:" in captured.err


# --- record and run ----------------------------------------------------------


def stream_text():
    frames = [make_frame(33 * i, browInnerUp=0.9 if 2 <= i <= 4 else 0.0) for i in range(8)]
    lines = [encode_frame(f) for f in frames]
    lines.insert(3, "{ not json")  # exercised as a skipped bad line
    lines.insert(5, "")  # blank lines are ignored
    return "\n".join(lines) + "\n", frames


def test_record_from_stdin(tmp_path, capsys, monkeypatch):
    text, frames = stream_text()
    monkeypatch.setattr("sys.stdin", io.StringIO(text))
    out_path = tmp_path / "trace.jsonl"
    code = cli.main(["record", "--source", "stdin", "--out", str(out_path)])
    captured = capsys.readouterr()
    assert code == 0
    assert f"recorded {len(frames)} frames" in captured.err
    assert read_lines(str(out_path)) == [encode_frame(f) for f in frames]


def test_record_bad_source_exits_two(tmp_path, capsys):
    code = cli.main(
        ["record", "--source", "carrier-pigeon", "--out", str(tmp_path / "t.jsonl")]
    )
    captured = capsys.readouterr()
    assert code == 2
    assert "bad source" in captured.err


def test_run_from_stdin_matches_replay(tmp_path, capsys, monkeypatch, game_profile):
    text, frames = stream_text()
    monkeypatch.setattr("sys.stdin", io.StringIO(text))
    log_path = tmp_path / "run.log"
    code = cli.main(
        [
            "run",
            "--profile",
            PROFILE_GAME,
            "--source",
            "stdin",
            "--sink",
            "virtual",
            "--log",
            str(log_path),
        ]
    )
    capsys.readouterr()
    assert code == 0
    expected_log, _stats = replay_trace(game_profile, text.splitlines())
    assert read_lines(str(log_path)) == expected_log.lines()
    joined = "\n".join(read_lines(str(log_path)))
    assert "bad frame skipped" in joined
    assert '"key":"space"' in joined


def test_run_missing_model_file_exits_one(tmp_path, capsys):
    code = cli.main(
        [
            "run",
            "--profile",
            PROFILE_GAME,
            "--source",
            "stdin",
            "--model",
            str(tmp_path / "none.json"),
        ]
    )
    captured = capsys.readouterr()
    assert code == 1
    assert "error:" in captured.err
