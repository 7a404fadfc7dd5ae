"""Event streams, time maps and the text event file format."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DataError, IOFailure, ParseError
from .geometry import PinholeIntrinsics, ScanTiming, StereoRig

POSITIVE_ONLY = "positive"
BOTH = "both"

_HEADER_RE = re.compile(
    r"^#\s*esl-events\s+v1\s+width=(\d+)\s+height=(\d+)\s+t0=(\S+)\s+T=(\S+)\s*$"
)


class Event(NamedTuple):
    x: int
    y: int
    t: float
    polarity: int


@dataclass(frozen=True, eq=False)
class EventStream:
    """Time-sorted batch of events from one scan interval.

    Stored column-wise; ``t`` in microseconds, ``p`` in {+1, -1}.
    """

    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    p: np.ndarray
    width: int
    height: int
    t0: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise DataError("event columns have different lengths")
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.int64))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=np.int64))
        object.__setattr__(self, "t", np.asarray(self.t, dtype=np.float64))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=np.int8))
        if n and np.any(np.diff(self.t) < 0):
            raise DataError("events must be sorted by timestamp")

    @classmethod
    def empty(cls, width, height, t0=0.0, duration=0.0):
        z = np.zeros(0)
        return cls(z, z, z, z, width, height, t0, duration)

    @classmethod
    def from_events(cls, events, width, height, t0=0.0, duration=0.0):
        events = list(events)
        if not events:
            return cls.empty(width, height, t0, duration)
        x, y, t, p = zip(*((e.x, e.y, e.t, e.polarity) for e in events))
        return cls(np.array(x), np.array(y), np.array(t), np.array(p), width, height, t0, duration)

    def __len__(self):
        return len(self.t)

    def __iter__(self):
        for i in range(len(self)):
            yield Event(int(self.x[i]), int(self.y[i]), float(self.t[i]), int(self.p[i]))

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            (self.width, self.height, self.t0, self.duration)
            == (other.width, other.height, other.t0, other.duration)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.p, other.p)
        )

    def shifted(self, offset: float) -> "EventStream":
        """Same events with every timestamp moved by ``offset`` µs."""
        return EventStream(self.x, self.y, self.t + offset, self.p, self.width, self.height,
                           self.t0, self.duration)


@dataclass(frozen=True, eq=False)
class TimeMap:
    """Per-pixel timestamp grid with an explicit validity mask.

    ``values`` holds µs; cells where ``valid`` is False carry no meaning
    (they are stored as NaN so they cannot be used by accident).
    """

    values: np.ndarray
    valid: np.ndarray
    t0: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        valid = np.array(self.valid, dtype=bool)
        if values.shape != valid.shape or values.ndim != 2:
            raise DataError("time map values and mask must be equal 2-D shapes")
        if np.any(~np.isfinite(values[valid])):
            raise DataError("valid time-map cells must be finite")
        values[~valid] = np.nan
        values.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    @classmethod
    def from_array(cls, arr, t0=0.0, duration=0.0):
        """Build from an array where NaN marks invalid cells."""
        arr = np.asarray(arr, dtype=np.float64)
        return cls(np.where(np.isfinite(arr), arr, np.nan), np.isfinite(arr), t0, duration)

    @property
    def shape(self):
        return self.values.shape

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def height(self):
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, TimeMap):
            return NotImplemented
        return np.array_equal(self.valid, other.valid) and np.array_equal(
            self.values[self.valid], other.values[other.valid]
        )

    def shifted(self, offset: float) -> "TimeMap":
        return TimeMap(self.values + offset, self.valid, self.t0 + offset, self.duration)

    def scaled(self, factor: float) -> "TimeMap":
        return TimeMap(self.values * factor, self.valid, self.t0 * factor, self.duration * factor)

    def to_array(self) -> np.ndarray:
        return np.array(self.values)


def build_camera_time_map(stream: EventStream, polarity_filter: str = POSITIVE_ONLY) -> TimeMap:
    """Latest accepted event timestamp per pixel."""
    if polarity_filter not in (POSITIVE_ONLY, BOTH):
        raise ConfigError(f"unknown polarity filter {polarity_filter!r}")
    w, h = stream.width, stream.height
    bad = (stream.x < 0) | (stream.x >= w) | (stream.y < 0) | (stream.y >= h)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise DataError(f"event {i} at ({stream.x[i]}, {stream.y[i]}) outside {w}x{h} sensor")
    keep = stream.p > 0 if polarity_filter == POSITIVE_ONLY else np.ones(len(stream), bool)
    flat = np.full(w * h, -np.inf)
    np.maximum.at(flat, stream.y[keep] * w + stream.x[keep], stream.t[keep])
    flat = flat.reshape(h, w)
    valid = np.isfinite(flat)
    return TimeMap(np.where(valid, flat, np.nan), valid, stream.t0, stream.duration)


def build_projector_time_map(timing: ScanTiming, projector: PinholeIntrinsics) -> TimeMap:
    """Illumination times over the projector grid.

    The projector is rotated by 90 degrees, so each raster line is a
    projector column swept top to bottom, and lines advance left to right.
    """
    if projector.width != timing.lines or projector.height != timing.pixels_per_line:
        raise ConfigError(
            f"projector grid {projector.width}x{projector.height} does not match "
            f"{timing.lines} lines x {timing.pixels_per_line} pixels per line"
        )
    cols = np.arange(projector.width, dtype=np.float64)
    rows = np.arange(projector.height, dtype=np.float64)
    values = timing.t0 + cols[None, :] * timing.dt_line() + rows[:, None] * timing.dt()
    return TimeMap(values, np.ones(values.shape, bool), timing.t0, timing.pass_duration())


def resample_projector_map(tau_p: TimeMap, rig: StereoRig) -> TimeMap:
    """Resample a projector-grid time map onto the camera's rectified grid.

    Every camera cell looks up the projector pixel nearest to the same
    rectified ray direction; cells with no projector pixel are invalid.
    """
    cam = rig.camera
    if tau_p.shape != rig.projector.shape:
        raise ConfigError("projector time map does not match the projector grid")
    pc = np.rint(rig.camera_column_to_projector_scale(np.arange(cam.width))).astype(np.int64)
    pr = np.rint(rig.camera_row_to_projector_scale(np.arange(cam.height))).astype(np.int64)
    okc = (pc >= 0) & (pc < rig.projector.width)
    okr = (pr >= 0) & (pr < rig.projector.height)
    values = np.full(cam.shape, np.nan)
    valid = np.zeros(cam.shape, bool)
    rr, cc = np.ix_(np.flatnonzero(okr), np.flatnonzero(okc))
    values[rr, cc] = tau_p.values[pr[okr][:, None], pc[okc][None, :]]
    valid[rr, cc] = tau_p.valid[pr[okr][:, None], pc[okc][None, :]]
    return TimeMap(values, valid, tau_p.t0, tau_p.duration)


# --- text format ------------------------------------------------------------


def _fmt_time(t: float) -> str:
    return f"{t:.3f}"


def write_events(stream: EventStream, path) -> None:
    """Write ``# esl-events v1`` text: one ``t_us x y p`` line per event."""
    lines = [
        f"# esl-events v1 width={stream.width} height={stream.height} "
        f"t0={_fmt_time(stream.t0)} T={_fmt_time(stream.duration)}\n"
    ]
    lines.extend(
        f"{t:.3f} {x} {y} {p}\n"
        for t, x, y, p in zip(stream.t.tolist(), stream.x.tolist(), stream.y.tolist(), stream.p.tolist())
    )
    try:
        Path(path).write_text("".join(lines), encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot write events to {path}: {exc}") from exc


def read_events(path) -> EventStream:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot read events from {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise ParseError(f"{path}:1: missing esl-events header")
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise ParseError(f"{path}:1: malformed header {lines[0]!r}")
    width, height = int(m.group(1)), int(m.group(2))
    try:
        t0, duration = float(m.group(3)), float(m.group(4))
    except ValueError as exc:
        raise ParseError(f"{path}:1: bad t0/T in header") from exc

    n = len(lines) - 1
    t = np.empty(n)
    x = np.empty(n, np.int64)
    y = np.empty(n, np.int64)
    p = np.empty(n, np.int8)
    k = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        try:
            if len(parts) != 4:
                raise ValueError
            t[k], x[k], y[k], p[k] = float(parts[0]), int(parts[1]), int(parts[2]), int(parts[3])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: malformed event line {line!r}") from None
        if p[k] not in (1, -1):
            raise ParseError(f"{path}:{lineno}: polarity must be +1 or -1")
        if k and t[k] < t[k - 1]:
            raise ParseError(f"{path}:{lineno}: events not sorted by timestamp")
        k += 1
    return EventStream(x[:k], y[:k], t[:k], p[:k], width, height, t0, duration)
