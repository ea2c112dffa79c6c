"""Live edge of the system: camera frames in, feature-frame lines out.

A camera yields images, an extractor turns each image into `Features`
(or None when no face is visible), and `stream()` paces the loop at the
configured frame rate while fanning encoded lines out to one or more
transports (a TCP connection to the engine, a trace file, or both).

Two extractors ship:

- `SyntheticExtractor` reads ground-truth signals that `SyntheticCamera`
  embeds in its images.  It exists so the whole pipeline — pacing,
  encoding, reconnect, recording — runs deterministically with no camera
  and no models, which is also how the tests drive it.
- `LandmarkExtractor` wraps the pretrained face-landmark/blendshape model
  and a pretrained gaze network.  Both imports are lazy and guarded: on a
  machine without them the constructor raises a clear error instead of
  crashing at import time.

The face box comes from the landmark extremes padded 10% per side before
the gaze crop; `pad_box` owns that rule.
"""

from __future__ import annotations

import math
import socket
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Protocol

from .codec import Features, complete_blend, encode_frame_line

DEFAULT_WIDTH = 640
DEFAULT_HEIGHT = 480
DEFAULT_FPS = 30.0
BOX_PAD_FRACTION = 0.10


@dataclass(frozen=True)
class AdapterConfig:
    """Everything the capture loop needs to run."""

    camera: int = 0
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    fps: float = DEFAULT_FPS
    endpoint: str | None = None  # "HOST:PORT" of a listening engine
    record_path: str | None = None
    landmark_model: str | None = None
    gaze_model: str | None = None
    max_frames: int | None = None
    reconnect_base_s: float = 0.25
    reconnect_cap_s: float = 2.0

    def validate(self) -> None:
        if self.fps <= 0 or not math.isfinite(self.fps):
            raise ValueError(f"fps must be positive, got {self.fps}")
        if self.camera < 0:
            raise ValueError(f"camera index must be >= 0, got {self.camera}")
        if self.endpoint is None and self.record_path is None:
            raise ValueError("nothing to do: need an endpoint, a record path, or both")


# --- clocks ------------------------------------------------------------------


class Clock(Protocol):
    def monotonic(self) -> float: ...

    def sleep(self, seconds: float) -> None: ...


class SystemClock:
    """Wall-clock pacing for live runs."""

    def monotonic(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class FakeClock:
    """Deterministic clock for tests: sleep() just advances time."""

    def __init__(self, start: float = 0.0):
        self.now = start

    def monotonic(self) -> float:
        return self.now

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            self.now += seconds


# --- geometry ----------------------------------------------------------------


def pad_box(
    x0: float, y0: float, x1: float, y1: float, pad: float = BOX_PAD_FRACTION
) -> tuple[float, float, float, float]:
    """Grow a normalized box by `pad` of its own size per side, clamped.

    The gaze model wants a little context around the landmark extremes, so
    the face box is padded before cropping; at image edges the padding is
    simply cut off by the clamp.
    """
    if not (x0 < x1 and y0 < y1):
        raise ValueError(f"degenerate box ({x0}, {y0}, {x1}, {y1})")
    dx = (x1 - x0) * pad
    dy = (y1 - y0) * pad
    return (
        max(0.0, x0 - dx),
        max(0.0, y0 - dy),
        min(1.0, x1 + dx),
        min(1.0, y1 + dy),
    )


def _clamp_unit(value: float) -> float:
    return min(1.0, max(0.0, float(value)))


# --- cameras -----------------------------------------------------------------


class Camera(Protocol):
    def read(self) -> tuple[bool, object | None]:
        """(ok, image); ok=False means a corrupt grab, image=None means end."""
        ...


class SyntheticCamera:
    """A scripted camera whose "images" carry their own ground truth.

    Each image is a dict with optional keys: `present` (default True),
    `expr` (blendshape overrides), `pose` ((yaw, pitch, roll)), `gaze`
    ((yaw, pitch)), `center`/`size` (face position in the frame), and
    `corrupt` (the grab fails).  `script` is a sequence of such dicts or a
    callable index -> dict; `neutral(n, seed)` builds a mildly jittering
    neutral face.
    """

    def __init__(self, script):
        if callable(script):
            self._frames = None
            self._fn = script
        else:
            self._frames = list(script)
            self._fn = None
        self._index = 0

    @classmethod
    def neutral(cls, n: int, seed: int = 0) -> "SyntheticCamera":
        import random

        rng = random.Random(seed)
        frames = []
        for _ in range(n):
            frames.append(
                {
                    "expr": {
                        "jawOpen": abs(rng.gauss(0.01, 0.01)),
                        "eyeBlinkLeft": abs(rng.gauss(0.05, 0.02)),
                        "eyeBlinkRight": abs(rng.gauss(0.05, 0.02)),
                    },
                    "pose": (rng.gauss(0.0, 1.0), rng.gauss(3.0, 1.0), rng.gauss(0.0, 0.5)),
                    "gaze": (rng.gauss(0.0, 2.0), rng.gauss(0.0, 2.0)),
                    "center": (0.5 + rng.gauss(0.0, 0.01), 0.5 + rng.gauss(0.0, 0.01)),
                    "size": 0.4 + rng.gauss(0.0, 0.005),
                }
            )
        return cls(frames)

    def read(self) -> tuple[bool, dict | None]:
        if self._frames is not None and self._index >= len(self._frames):
            return True, None
        image = self._fn(self._index) if self._fn else self._frames[self._index]
        self._index += 1
        if image is None:
            return True, None
        if image.get("corrupt"):
            return False, None
        return True, image


class SyntheticExtractor:
    """Turns a SyntheticCamera image into validated, clamped Features."""

    def extract(self, image: dict) -> Features | None:
        if not image.get("present", True):
            return None
        expr = {k: _clamp_unit(v) for k, v in image.get("expr", {}).items()}
        yaw, pitch, roll = image.get("pose", (0.0, 3.0, 0.0))
        gaze_yaw, gaze_pitch = image.get("gaze", (0.0, 0.0))
        cx, cy = image.get("center", (0.5, 0.5))
        half = max(0.05, float(image.get("size", 0.4))) / 2.0
        raw_box = (
            _clamp_unit(cx - half),
            _clamp_unit(cy - half),
            _clamp_unit(cx + half),
            _clamp_unit(cy + half),
        )
        if not (raw_box[0] < raw_box[2] and raw_box[1] < raw_box[3]):
            return None  # face is entirely off-frame
        return Features(
            blend=complete_blend(expr),
            head_yaw=float(yaw),
            head_pitch=float(pitch),
            head_roll=float(roll),
            gaze_yaw=float(gaze_yaw),
            gaze_pitch=float(gaze_pitch),
            box=pad_box(*raw_box),
        )


class LandmarkExtractor:
    """Pretrained landmark/blendshape model plus a pretrained gaze network.

    Both backends are optional heavyweight dependencies, imported lazily so
    the rest of the station works without them.  Inference failures on a
    single frame degrade to a no-face frame rather than killing the stream.
    """

    def __init__(self, landmark_model: str, gaze_model: str, device: str = "cpu"):
        try:
            import mediapipe as mp
            from mediapipe.tasks.python import vision
        except ImportError as exc:
            raise RuntimeError(
                "the live extractor needs the 'mediapipe' package; install it "
                "or run with the synthetic extractor"
            ) from exc
        base = mp.tasks.BaseOptions(model_asset_path=landmark_model)
        options = vision.FaceLandmarkerOptions(
            base_options=base,
            output_face_blendshapes=True,
            output_facial_transformation_matrixes=True,
            num_faces=1,
        )
        self._landmarker = vision.FaceLandmarker.create_from_options(options)
        self._mp = mp
        self._gaze = self._load_gaze(gaze_model, device)

    @staticmethod
    def _load_gaze(path: str, device: str):
        try:
            import torch
        except ImportError as exc:
            raise RuntimeError(
                "the live gaze model needs the 'torch' package; install it "
                "or run with the synthetic extractor"
            ) from exc
        model = torch.jit.load(path, map_location=device)
        model.eval()
        return model

    def extract(self, image) -> Features | None:
        import numpy as np

        try:
            mp_image = self._mp.Image(
                image_format=self._mp.ImageFormat.SRGB, data=np.asarray(image)
            )
            result = self._landmarker.detect(mp_image)
        except Exception:
            return None  # a single bad inference is a no-face frame
        if not result.face_landmarks:
            return None

        landmarks = result.face_landmarks[0]
        xs = [p.x for p in landmarks]
        ys = [p.y for p in landmarks]
        box = pad_box(
            _clamp_unit(min(xs)),
            _clamp_unit(min(ys)),
            _clamp_unit(max(xs)),
            _clamp_unit(max(ys)),
        )

        blend = {c.category_name: _clamp_unit(c.score) for c in result.face_blendshapes[0]}
        yaw, pitch, roll = self._pose_angles(result.facial_transformation_matrixes[0])
        gaze_yaw, gaze_pitch = self._gaze_angles(image, box)
        return Features(
            blend=complete_blend(blend),
            head_yaw=yaw,
            head_pitch=pitch,
            head_roll=roll,
            gaze_yaw=gaze_yaw,
            gaze_pitch=gaze_pitch,
            box=box,
        )

    @staticmethod
    def _pose_angles(matrix) -> tuple[float, float, float]:
        import numpy as np

        r = np.asarray(matrix)[:3, :3]
        yaw = math.degrees(math.atan2(-r[2, 0], math.hypot(r[0, 0], r[1, 0])))
        pitch = math.degrees(math.atan2(r[2, 1], r[2, 2]))
        roll = math.degrees(math.atan2(r[1, 0], r[0, 0]))
        clamp = lambda a: max(-90.0, min(90.0, a))
        return clamp(yaw), clamp(pitch), clamp(roll)

    def _gaze_angles(self, image, box: tuple[float, float, float, float]) -> tuple[float, float]:
        import numpy as np
        import torch

        arr = np.asarray(image)
        h, w = arr.shape[:2]
        x0, y0, x1, y1 = box
        crop = arr[int(y0 * h) : int(y1 * h), int(x0 * w) : int(x1 * w)]
        if crop.size == 0:
            return 0.0, 0.0
        import cv2

        crop = cv2.resize(crop, (224, 224)).astype("float32") / 255.0
        tensor = torch.from_numpy(crop).permute(2, 0, 1).unsqueeze(0)
        with torch.no_grad():
            yaw_rad, pitch_rad = self._gaze(tensor)[0].tolist()[:2]
        return math.degrees(yaw_rad), math.degrees(pitch_rad)


def open_camera(config: AdapterConfig) -> Camera:
    """Open the OS camera via OpenCV; fatal if it cannot deliver frames."""
    try:
        import cv2
    except ImportError as exc:
        raise RuntimeError(
            "camera capture needs the 'opencv-python' package; install it "
            "or run with the synthetic camera"
        ) from exc
    cap = cv2.VideoCapture(config.camera)
    cap.set(cv2.CAP_PROP_FRAME_WIDTH, config.width)
    cap.set(cv2.CAP_PROP_FRAME_HEIGHT, config.height)
    if not cap.isOpened():
        raise RuntimeError(f"camera {config.camera} unavailable")

    class _CvCamera:
        def read(self) -> tuple[bool, object | None]:
            ok, frame = cap.read()
            if not ok:
                return False, None
            return True, frame[:, :, ::-1]  # BGR -> RGB

    return _CvCamera()


# --- transports --------------------------------------------------------------


class Transport(Protocol):
    def send_line(self, line: str) -> None: ...

    def close(self) -> None: ...


class FileTransport:
    """Append lines to a trace file, flushed per frame."""

    def __init__(self, path: str):
        self._fh = open(path, "w", encoding="utf-8")

    def send_line(self, line: str) -> None:
        self._fh.write(line + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


class TcpTransport:
    """Line sender that reconnects with exponential backoff on socket loss.

    `connect` is injectable for tests; the default dials HOST:PORT.  A
    failed send closes the connection, waits (base, 2*base, ... capped),
    redials, and resends the same line, so no frame is silently dropped by
    a transient engine restart.
    """

    def __init__(
        self,
        endpoint: str,
        clock: Clock | None = None,
        base_backoff_s: float = 0.25,
        cap_backoff_s: float = 2.0,
        max_attempts: int = 8,
        connect: Callable[[], object] | None = None,
    ):
        host, _, port = endpoint.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"bad endpoint {endpoint!r}; expected HOST:PORT")
        self._address = (host, int(port))
        self._clock = clock or SystemClock()
        self._base = base_backoff_s
        self._cap = cap_backoff_s
        self._max_attempts = max_attempts
        self._connect = connect or self._dial
        self._conn = None
        self.reconnects = 0

    def _dial(self):
        return socket.create_connection(self._address, timeout=5.0)

    def _ensure_connected(self) -> None:
        if self._conn is None:
            self._conn = self._connect()

    def send_line(self, line: str) -> None:
        payload = (line + "\n").encode("utf-8")
        backoff = self._base
        for attempt in range(self._max_attempts):
            try:
                self._ensure_connected()
                self._conn.sendall(payload)
                return
            except OSError:
                if self._conn is not None:
                    try:
                        self._conn.close()
                    except OSError:
                        pass
                    self._conn = None
                if attempt == self._max_attempts - 1:
                    raise
                self._clock.sleep(backoff)
                backoff = min(backoff * 2, self._cap)
                self.reconnects += 1

    def close(self) -> None:
        if self._conn is not None:
            try:
                self._conn.close()
            except OSError:
                pass
            self._conn = None


# --- the stream loop ----------------------------------------------------------


@dataclass
class StreamStats:
    sent: int = 0
    absent: int = 0
    skipped: int = 0
    lines: list[str] = field(default_factory=list, repr=False)


def stream(
    config: AdapterConfig,
    camera: Camera,
    extractor,
    transports: list[Transport],
    clock: Clock | None = None,
    keep_lines: bool = False,
) -> StreamStats:
    """Run the capture loop until the camera ends or max_frames is reached.

    Pacing: frame n is not emitted before start + n/fps, so the emission
    rate never exceeds the configured fps.  Timestamps come from the
    pacing clock relative to stream start and are monotone by
    construction, surviving transport reconnects unchanged.  A corrupt
    camera grab consumes its frame slot and is skipped; a frame with no
    detected face is still emitted (the engine needs face-loss frames to
    release held input).
    """
    config.validate()
    clock = clock or SystemClock()
    stats = StreamStats()
    start = clock.monotonic()
    n = 0
    while config.max_frames is None or n < config.max_frames:
        due = start + n / config.fps
        now = clock.monotonic()
        if due > now:
            clock.sleep(due - now)
            now = clock.monotonic()
        ok, image = camera.read()
        if image is None and ok:
            break  # camera ended
        n += 1
        if not ok:
            stats.skipped += 1
            continue
        t_ms = round((now - start) * 1000)
        features = extractor.extract(image)
        if features is None:
            stats.absent += 1
        line = encode_frame_line(t_ms, features)
        for transport in transports:
            transport.send_line(line)
        if keep_lines:
            stats.lines.append(line)
        stats.sent += 1
    return stats


def iter_trace(path: str) -> Iterator[tuple[int, Features | None]]:
    """Yield (t_ms, features) pairs from a recorded trace file."""
    from .codec import parse_record

    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield parse_record(line)
