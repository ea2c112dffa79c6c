"""Command line interface.

Subcommands: run (live control from a socket or stdin), replay (trace ->
event log, optional golden comparison and report figures), record (live
source -> trace file), calibrate (sample file -> model file, optional
report figures), check-config (validate a profile, optionally checking key
coverage).

Exit codes: 0 ok, 1 config or input error, 2 runtime error, 3 golden
mismatch.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
import threading
from collections import deque

from . import calibration
from .engine import DEFAULT_SCREEN, Engine, record_stream, replay_trace
from .frames import DecodeError, decode_frame
from .profile import ConfigError, load_profile, validate_coverage
from .sinks import VirtualSink, make_sink

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_GOLDEN = 3

QUEUE_MAX = 64


def _parse_screen(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected WIDTHxHEIGHT (e.g. 1920x1080), got {text!r}"
        ) from None


def _open_source(spec: str):
    """Yield lines from "stdin" or "tcp:HOST:PORT" (listen, one client)."""
    if spec == "stdin":
        for line in sys.stdin:
            yield line
        return
    if spec.startswith("tcp:"):
        try:
            _, host, port = spec.split(":")
            port_num = int(port)
        except ValueError:
            raise ValueError(f"bad source {spec!r}; expected tcp:HOST:PORT") from None
        server = socket.create_server((host, port_num))
        try:
            conn, _addr = server.accept()
        finally:
            server.close()
        with conn, conn.makefile("r", encoding="utf-8") as fh:
            for line in fh:
                yield line
        return
    raise ValueError(f"bad source {spec!r}; expected stdin or tcp:HOST:PORT")


class _UiBroadcast:
    """Best-effort snapshot fan-out to any connected overlay clients."""

    def __init__(self, port: int):
        self._clients: list[socket.socket] = []
        self._lock = threading.Lock()
        self._server = socket.create_server(("127.0.0.1", port))
        self.port = self._server.getsockname()[1]
        thread = threading.Thread(target=self._accept_loop, daemon=True)
        thread.start()

    def _accept_loop(self) -> None:
        while True:
            try:
                conn, _addr = self._server.accept()
            except OSError:
                return
            with self._lock:
                self._clients.append(conn)

    def publish(self, snapshot: dict) -> None:
        line = (json.dumps(snapshot, sort_keys=True) + "\n").encode()
        with self._lock:
            alive = []
            for conn in self._clients:
                try:
                    conn.sendall(line)
                    alive.append(conn)
                except OSError:
                    conn.close()
            self._clients = alive

    def close(self) -> None:
        self._server.close()
        with self._lock:
            for conn in self._clients:
                conn.close()
            self._clients.clear()


def _load_profile_or_fail(path: str):
    profile = load_profile(path)
    for warning in profile.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return profile


def _cmd_run(args) -> int:
    try:
        profile = _load_profile_or_fail(args.profile)
        model = calibration.load_model(args.model) if args.model else None
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        sink = make_sink(args.sink)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    ui = None
    engine = Engine(profile, screen=args.screen, model=model, sink=sink)
    try:
        if args.ui_port is not None:
            ui = _UiBroadcast(args.ui_port)
            print(f"ui channel on 127.0.0.1:{ui.port}", file=sys.stderr)

        queue: deque[str] = deque()
        cond = threading.Condition()
        done = threading.Event()
        dropped = [0]

        def reader() -> None:
            try:
                for line in _open_source(args.source):
                    with cond:
                        if len(queue) >= QUEUE_MAX:
                            queue.popleft()
                            dropped[0] += 1
                        queue.append(line)
                        cond.notify()
            finally:
                done.set()
                with cond:
                    cond.notify()

        thread = threading.Thread(target=reader, daemon=True)
        thread.start()

        while True:
            with cond:
                while not queue and not done.is_set():
                    cond.wait(timeout=0.5)
                if not queue and done.is_set():
                    break
                line = queue.popleft()
                drops = dropped[0]
                dropped[0] = 0
            line = line.strip()
            if not line:
                continue
            if drops:
                engine._diag(engine.last_t or 0, f"dropped {drops} frames (backpressure)")
            try:
                frame = decode_frame(line)
            except DecodeError as exc:
                engine._diag(engine.last_t or 0, f"bad frame skipped: {exc}")
                continue
            engine.step(frame)
            if ui is not None:
                ui.publish(engine.snapshot())
    except KeyboardInterrupt:
        pass
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        engine.finish()
        if args.log:
            engine.log.write(args.log)
        return EXIT_RUNTIME
    finally:
        if ui is not None:
            ui.close()
    engine.finish()
    if args.log:
        engine.log.write(args.log)
    else:
        for line in engine.log.lines():
            print(line)
    return EXIT_OK


def _cmd_replay(args) -> int:
    try:
        profile = _load_profile_or_fail(args.profile)
        model = calibration.load_model(args.model) if args.model else None
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    snapshots: list[dict] = []
    hook = snapshots.append if args.ui_log else None
    try:
        with open(args.trace, encoding="utf-8") as fh:
            log, stats = replay_trace(
                profile,
                fh,
                model=model,
                screen=args.screen,
                speed=args.speed,
                snapshot_hook=hook,
            )
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    if args.log:
        log.write(args.log)
    else:
        for line in log.lines():
            print(line)
    if args.ui_log:
        with open(args.ui_log, "w", encoding="utf-8") as fh:
            for snap in snapshots:
                fh.write(json.dumps(snap, sort_keys=True) + "\n")
    if args.report:
        from .report import render_replay_report

        for path in render_replay_report(log, args.report):
            print(f"report: {path}", file=sys.stderr)
    print(
        f"replayed {stats.frames} frames, {stats.decode_errors} bad lines, "
        f"mean step {stats.mean_step_seconds * 1000:.3f} ms",
        file=sys.stderr,
    )

    if args.golden:
        try:
            with open(args.golden, encoding="utf-8") as fh:
                golden = fh.read().splitlines()
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        actual = log.lines()
        if actual != golden:
            for i, (got, want) in enumerate(zip(actual, golden)):
                if got != want:
                    print(
                        f"golden mismatch at line {i + 1}:\n  got:  {got}\n  want: {want}",
                        file=sys.stderr,
                    )
                    break
            else:
                print(
                    f"golden mismatch: {len(actual)} lines vs {len(golden)} expected",
                    file=sys.stderr,
                )
            return EXIT_GOLDEN
        print("golden match", file=sys.stderr)
    return EXIT_OK


def _cmd_record(args) -> int:
    try:
        count = record_stream(_open_source(args.source), args.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_OK
    print(f"recorded {count} frames to {args.out}", file=sys.stderr)
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    try:
        samples = calibration.load_samples(args.samples)
        chosen, scores = calibration.cross_validate(samples)
        model = calibration.fit_calibration(samples)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        calibration.save_model(model, args.out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(
        f"fitted {len(samples)} samples: lambda={model.lam:.6g} "
        f"cv_mse={model.cv_mse:.3f} -> {args.out}",
        file=sys.stderr,
    )
    if args.report:
        from .report import render_calibration_report

        for path in render_calibration_report(model, samples, scores, args.report):
            print(f"report: {path}", file=sys.stderr)
    return EXIT_OK


def _cmd_check_config(args) -> int:
    try:
        profile = _load_profile_or_fail(args.profile)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(
        f"profile ok: modes={list(profile.mode_order)} "
        f"intentions={len(profile.intentions)} rules={len(profile.rules)} "
        f"warnings={len(profile.warnings)}"
    )
    if args.require_keys:
        required = [k for k in args.require_keys.split(",") if k]
        report = validate_coverage(profile, required)
        for token in required:
            if token in report.reachable:
                paths = ", ".join(report.reachable[token][:3])
                print(f"reachable: {token} via {paths}")
            else:
                print(f"MISSING: {token}")
        if not report.ok:
            print(f"error: {len(report.missing)} required keys unreachable", file=sys.stderr)
            return EXIT_CONFIG
        print(f"all {len(required)} required keys reachable")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facepilot",
        description="Facial feature streams to full computer control.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="drive input from a live frame source")
    run.add_argument("--profile", required=True)
    run.add_argument("--source", required=True, help="tcp:HOST:PORT or stdin")
    run.add_argument("--sink", choices=["virtual", "os"], default="virtual")
    run.add_argument("--log", help="write the event log to this file")
    run.add_argument("--model", help="calibration model file for cursor control")
    run.add_argument("--screen", type=_parse_screen, default=DEFAULT_SCREEN)
    run.add_argument("--ui-port", type=int, help="serve overlay snapshots on this port")
    run.set_defaults(func=_cmd_run)

    replay = sub.add_parser("replay", help="run a recorded trace to an event log")
    replay.add_argument("--profile", required=True)
    replay.add_argument("--trace", required=True)
    replay.add_argument("--speed", choices=["max", "realtime"], default="max")
    replay.add_argument("--golden", help="compare the log against this file")
    replay.add_argument("--log", help="write the event log to this file")
    replay.add_argument("--model", help="calibration model file for cursor control")
    replay.add_argument("--report", help="render report figures into this directory")
    replay.add_argument("--ui-log", help="write per-frame overlay snapshots to this file")
    replay.add_argument("--screen", type=_parse_screen, default=DEFAULT_SCREEN)
    replay.set_defaults(func=_cmd_replay)

    record = sub.add_parser("record", help="save a live frame stream to a trace file")
    record.add_argument("--source", required=True, help="tcp:HOST:PORT or stdin")
    record.add_argument("--out", required=True)
    record.set_defaults(func=_cmd_record)

    calibrate = sub.add_parser("calibrate", help="fit a gaze model from samples")
    calibrate.add_argument("--samples", required=True)
    calibrate.add_argument("--out", required=True)
    calibrate.add_argument("--report", help="render report figures into this directory")
    calibrate.set_defaults(func=_cmd_calibrate)

    check = sub.add_parser("check-config", help="validate a profile file")
    check.add_argument("profile")
    check.add_argument("--require-keys", help="comma-separated action tokens")
    check.set_defaults(func=_cmd_check_config)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
