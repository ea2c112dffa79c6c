"""Station command line: capture, calibration session, tuner, overlay.

`capture` streams feature frames to a listening engine and/or a trace
file; `session` runs the guided calibration protocol and writes a sample
file for the engine's `calibrate` command; `tune` applies threshold edits
with engine-side validation; `overlay` mirrors the engine's snapshot
channel, either in a window or as a text HUD.

Exit codes: 0 ok, 1 config or input error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .capture import (
    AdapterConfig,
    FileTransport,
    LandmarkExtractor,
    SyntheticCamera,
    SyntheticExtractor,
    TcpTransport,
    open_camera,
    stream,
)
from .codec import EncodeError
from .overlay import layout_overlay, render_text
from .session import SessionSpec, run_session, simulated_user_feed
from .tuner import ThresholdTuner, TunerError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _parse_screen(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected WIDTHxHEIGHT (e.g. 1920x1080), got {text!r}"
        ) from None


def _cmd_capture(args) -> int:
    config = AdapterConfig(
        camera=args.camera,
        fps=args.fps,
        endpoint=args.connect,
        record_path=args.record,
        landmark_model=args.landmark_model,
        gaze_model=args.gaze_model,
        max_frames=args.frames,
    )
    try:
        config.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.extractor == "synthetic":
            camera = SyntheticCamera.neutral(args.frames or 300, seed=args.seed)
            extractor = SyntheticExtractor()
        else:
            if not (args.landmark_model and args.gaze_model):
                print(
                    "error: the live extractor needs --landmark-model and --gaze-model",
                    file=sys.stderr,
                )
                return EXIT_CONFIG
            camera = open_camera(config)
            extractor = LandmarkExtractor(args.landmark_model, args.gaze_model)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    transports = []
    try:
        if args.connect:
            transports.append(TcpTransport(args.connect))
        if args.record:
            transports.append(FileTransport(args.record))
        stats = stream(config, camera, extractor, transports)
    except (OSError, ValueError, EncodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_OK
    finally:
        for transport in transports:
            transport.close()
    print(
        f"streamed {stats.sent} frames ({stats.absent} no-face, "
        f"{stats.skipped} corrupt skipped)",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_session(args) -> int:
    spec = SessionSpec(
        screen_w=args.screen[0],
        screen_h=args.screen[1],
        settle_ms=args.settle_ms,
        frames_per_sample=args.frames_per_sample,
    )
    try:
        spec.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.source == "synthetic":
        feed = simulated_user_feed(spec, seed=args.seed)
    elif args.source == "stdin":
        from .codec import parse_record

        def read_stdin():
            for line in sys.stdin:
                line = line.strip()
                if line:
                    try:
                        yield parse_record(line)
                    except (EncodeError, ValueError, KeyError):
                        continue  # a bad line is just a missed frame

        feed = read_stdin()
    else:
        from .capture import iter_trace

        feed = iter_trace(args.source)

    try:
        count = run_session(
            spec, feed, args.out, on_prompt=lambda text: print(text, file=sys.stderr)
        )
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    total = len(spec.pose_prompts) * 9
    if count < total:
        print(
            f"session incomplete: {count}/{total} samples (file marked aborted)",
            file=sys.stderr,
        )
        return EXIT_RUNTIME
    print(f"wrote {count} samples to {args.out}", file=sys.stderr)
    return EXIT_OK


def _parse_set(expr: str) -> tuple[str, int, str, float]:
    """intention.index.field=value, e.g. numlock.0.threshold=0.55"""
    try:
        lhs, value = expr.split("=", 1)
        intention, index, field = lhs.rsplit(".", 2)
        return intention, int(index), field, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected INTENTION.INDEX.FIELD=VALUE, got {expr!r}"
        ) from None


def _cmd_tune(args) -> int:
    try:
        tuner = ThresholdTuner(args.profile)
    except (TunerError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    pending_ranges: dict[tuple[str, int], dict[str, float]] = {}
    try:
        for intention, index, field, value in args.set or []:
            if field == "threshold":
                tuner.set_threshold(intention, index, value)
            elif field in ("min", "max"):
                pending_ranges.setdefault((intention, index), {})[field] = value
            else:
                print(f"error: unknown field {field!r}", file=sys.stderr)
                return EXIT_CONFIG
        for (intention, index), bounds in pending_ranges.items():
            current = tuner.conditions(intention)[index]
            tuner.set_range(
                intention,
                index,
                bounds.get("min", current.get("min")),
                bounds.get("max", current.get("max")),
            )
    except TunerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.status_blend:
        try:
            with open(args.status_blend, encoding="utf-8") as fh:
                blend = json.load(fh)
            status = tuner.live_status(blend)
            active = tuner.active_after_rules(blend)
        except (OSError, ValueError, TunerError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for name in sorted(status):
            st = status[name]
            flag = "ACTIVE" if name in active else ("raw" if st.active else "  -  ")
            print(f"{flag:>6} {name}")
            for cond in st.conditions:
                mark = "+" if cond.passed else " "
                print(f"        [{mark}] {cond.detail}")

    if args.save_as or args.save:
        try:
            target = tuner.save(args.save_as)
        except (TunerError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"saved {target}", file=sys.stderr)
    return EXIT_OK


def _cmd_overlay(args) -> int:
    if args.text:
        last_t = 0
        for line in sys.stdin:
            line = line.strip()
            if not line:
                continue
            try:
                snap = json.loads(line)
            except json.JSONDecodeError:
                continue
            last_t = max(last_t, int(snap.get("t_ms", 0)))
            scene = layout_overlay(snap, now_ms=last_t, dwell_total_ms=args.dwell_ms)
            print(render_text(scene))
            print()
        return EXIT_OK
    try:
        from .window import run_overlay

        run_overlay(args.connect, dwell_total_ms=args.dwell_ms)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facestation",
        description="Capture station and operator console for the face-control engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    capture = sub.add_parser("capture", help="stream camera features to the engine")
    capture.add_argument("--camera", type=int, default=0)
    capture.add_argument("--fps", type=float, default=30.0)
    capture.add_argument("--connect", help="HOST:PORT of a listening engine")
    capture.add_argument("--record", help="also save the stream to this trace file")
    capture.add_argument(
        "--extractor", choices=["synthetic", "live"], default="synthetic"
    )
    capture.add_argument("--landmark-model", help="face landmark model file (live)")
    capture.add_argument("--gaze-model", help="gaze model file (live)")
    capture.add_argument("--frames", type=int, help="stop after this many frames")
    capture.add_argument("--seed", type=int, default=0)
    capture.set_defaults(func=_cmd_capture)

    session = sub.add_parser("session", help="run the guided calibration protocol")
    session.add_argument("--out", required=True, help="sample file to write")
    session.add_argument("--screen", type=_parse_screen, default=(1920, 1080))
    session.add_argument(
        "--source",
        default="synthetic",
        help="synthetic, stdin, or a recorded trace file",
    )
    session.add_argument("--settle-ms", type=int, default=500)
    session.add_argument("--frames-per-sample", type=int, default=15)
    session.add_argument("--seed", type=int, default=0)
    session.set_defaults(func=_cmd_session)

    tune = sub.add_parser("tune", help="adjust expression thresholds, validated")
    tune.add_argument("--profile", required=True)
    tune.add_argument(
        "--set",
        type=_parse_set,
        action="append",
        metavar="INTENTION.INDEX.FIELD=VALUE",
        help="e.g. numlock.0.threshold=0.55 (repeatable)",
    )
    tune.add_argument("--save", action="store_true", help="save back to --profile")
    tune.add_argument("--save-as", help="save to a new file instead")
    tune.add_argument(
        "--status-blend",
        help="JSON file of blendshape values; print per-intention status",
    )
    tune.set_defaults(func=_cmd_tune)

    overlay = sub.add_parser("overlay", help="mirror the engine snapshot channel")
    overlay.add_argument("--connect", help="HOST:PORT of the engine --ui-port")
    overlay.add_argument(
        "--text", action="store_true", help="read snapshots from stdin, print a text HUD"
    )
    overlay.add_argument("--dwell-ms", type=int, default=1000)
    overlay.set_defaults(func=_cmd_overlay)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "overlay" and not args.text and not args.connect:
        print("error: overlay needs --connect HOST:PORT or --text", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
