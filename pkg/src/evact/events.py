"""Event data model, file I/O and stream-level preprocessing filters.

Events are stored column-wise (t, x, y, p as numpy arrays) inside an
:class:`EventStream`, which also carries the sensor geometry. Streams are
immutable after construction and every operation here is a pure
stream -> stream transform, so distinct clips can be processed in parallel
without shared state.

Timestamps are integer microseconds throughout; all window arithmetic is
integral to avoid float drift.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numba import njit

from .errors import ParseError, ValidationError

MAX_TIMESTAMP = (1 << 63) - 1

EVS_MAGIC = b"EVS1"
_EVS_HEADER = struct.Struct("<4sIIQ")
_EVS_RECORD_DTYPE = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "u1")])


class Event(NamedTuple):
    """A single sensor event: timestamp (us), column, row, polarity {0, 1}."""

    t: int
    x: int
    y: int
    p: int


@dataclass(frozen=True)
class EventStream:
    """Time-sorted event sequence with its sensor geometry (rows, cols)."""

    geometry: tuple[int, int]
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        h, w = self.geometry
        if h <= 0 or w <= 0:
            raise ValidationError(f"invalid geometry {self.geometry}")
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise ValidationError("event field arrays have mismatched lengths")
        object.__setattr__(self, "t", np.ascontiguousarray(self.t, dtype=np.int64))
        object.__setattr__(self, "x", np.ascontiguousarray(self.x, dtype=np.int32))
        object.__setattr__(self, "y", np.ascontiguousarray(self.y, dtype=np.int32))
        object.__setattr__(self, "p", np.ascontiguousarray(self.p, dtype=np.uint8))
        if n == 0:
            return
        bad = _first_invalid_index(self.t, self.x, self.y, self.p, h, w)
        if bad >= 0:
            raise ValidationError(
                f"event #{bad} (t={self.t[bad]}, x={self.x[bad]}, y={self.y[bad]}, "
                f"p={self.p[bad]}) violates geometry {h}x{w} or field bounds"
            )
        if np.any(np.diff(self.t) < 0):
            raise ValidationError("events are not sorted by timestamp")

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> Event:
        return Event(int(self.t[i]), int(self.x[i]), int(self.y[i]), int(self.p[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def _first_invalid_index(t, x, y, p, h, w):
    ok = (t >= 0) & (x >= 0) & (x < w) & (y >= 0) & (y < h) & (p <= 1)
    bad = np.flatnonzero(~ok)
    return int(bad[0]) if bad.size else -1


def make_stream(geometry, t, x, y, p, sort: bool = False) -> EventStream:
    """Build a stream from columns, optionally stable-sorting by timestamp."""
    t = np.asarray(t, dtype=np.int64)
    x = np.asarray(x, dtype=np.int32)
    y = np.asarray(y, dtype=np.int32)
    p = np.asarray(p, dtype=np.uint8)
    if sort and len(t) and np.any(np.diff(t) < 0):
        order = np.argsort(t, kind="stable")
        t, x, y, p = t[order], x[order], y[order], p[order]
    return EventStream(tuple(geometry), t, x, y, p)


@dataclass(frozen=True)
class RoiRect:
    """Half-open pixel rectangle [x0, x1) x [y0, y1)."""

    x0: int
    y0: int
    x1: int
    y1: int

    def validate(self, geometry):
        h, w = geometry
        if not (0 <= self.x0 < self.x1 <= w and 0 <= self.y0 < self.y1 <= h):
            raise ValidationError(f"roi {self} invalid for geometry {h}x{w}")


@dataclass
class Clip:
    """A labeled activity segment."""

    stream: EventStream
    label: int
    subject_id: str
    config_id: str


# ---------------------------------------------------------------------------
# parsing / serialization
# ---------------------------------------------------------------------------


def parse_events(data: bytes, format: str = "auto") -> EventStream:
    """Parse a CSV or packed-binary event buffer into a validated stream.

    Out-of-order inputs are stably sorted by timestamp. Malformed records
    raise :class:`ParseError` with the byte offset; coordinates outside the
    declared geometry raise :class:`ValidationError` naming the record.
    """
    if format == "auto":
        format = "packed-binary" if data[:4] == EVS_MAGIC else "csv"
    if format == "csv":
        return _parse_csv(data)
    if format == "packed-binary":
        return _parse_packed(data)
    raise ValueError(f"unknown event format {format!r}")


def _parse_csv(data: bytes) -> EventStream:
    offset = 0
    lines = data.split(b"\n")
    header = lines[0].split()
    if len(header) != 2:
        raise ParseError("header must be 'H W'", offset)
    try:
        h, w = int(header[0]), int(header[1])
    except ValueError:
        raise ParseError(f"bad header {lines[0]!r}", offset) from None
    offset += len(lines[0]) + 1

    rows = []
    for line in lines[1:]:
        stripped = line.strip()
        if stripped:
            parts = stripped.split()
            if len(parts) != 4:
                raise ParseError(f"expected 't x y p', got {stripped!r}", offset)
            try:
                rows.append((int(parts[0]), int(parts[1]), int(parts[2]), int(parts[3])))
            except ValueError:
                raise ParseError(f"non-integer field in {stripped!r}", offset) from None
        offset += len(line) + 1

    if rows:
        arr = np.array(rows, dtype=np.int64)
        t, x, y, p = arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]
    else:
        t = x = y = p = np.empty(0, dtype=np.int64)
    _check_ranges(t, x, y, p, h, w)
    return make_stream((h, w), t, x, y, p, sort=True)


def _parse_packed(data: bytes) -> EventStream:
    if len(data) < _EVS_HEADER.size:
        raise ParseError("truncated header", len(data))
    magic, h, w, count = _EVS_HEADER.unpack_from(data, 0)
    if magic != EVS_MAGIC:
        raise ParseError(f"bad magic {magic!r}", 0)
    need = _EVS_HEADER.size + count * _EVS_RECORD_DTYPE.itemsize
    if len(data) < need:
        raise ParseError(
            f"payload truncated: header declares {count} records", len(data)
        )
    rec = np.frombuffer(data, dtype=_EVS_RECORD_DTYPE, count=count, offset=_EVS_HEADER.size)
    t = rec["t"].astype(np.int64)
    if count and rec["t"].max() > MAX_TIMESTAMP:
        bad = int(np.argmax(rec["t"] > MAX_TIMESTAMP))
        raise ValidationError(f"event #{bad} timestamp exceeds 63 bits")
    x = rec["x"].astype(np.int32)
    y = rec["y"].astype(np.int32)
    p = rec["p"].astype(np.uint8)
    _check_ranges(t, x, y, p, h, w)
    return make_stream((h, w), t, x, y, p, sort=True)


def _check_ranges(t, x, y, p, h, w):
    bad = _first_invalid_index(
        np.asarray(t, np.int64), np.asarray(x, np.int64),
        np.asarray(y, np.int64), np.asarray(p, np.int64), h, w,
    )
    if bad >= 0:
        raise ValidationError(
            f"event #{bad} (t={t[bad]}, x={x[bad]}, y={y[bad]}, p={p[bad]}) "
            f"out of bounds for geometry {h}x{w}"
        )


def serialize_events(stream: EventStream, format: str = "packed-binary") -> bytes:
    """Inverse of :func:`parse_events` (bit-exact round trip for binary)."""
    h, w = stream.geometry
    if format == "csv":
        buf = io.StringIO()
        buf.write(f"{h} {w}\n")
        for i in range(len(stream)):
            buf.write(f"{stream.t[i]} {stream.x[i]} {stream.y[i]} {stream.p[i]}\n")
        return buf.getvalue().encode("ascii")
    if format == "packed-binary":
        rec = np.empty(len(stream), dtype=_EVS_RECORD_DTYPE)
        rec["t"] = stream.t
        rec["x"] = stream.x
        rec["y"] = stream.y
        rec["p"] = stream.p
        return _EVS_HEADER.pack(EVS_MAGIC, h, w, len(stream)) + rec.tobytes()
    raise ValueError(f"unknown event format {format!r}")


def read_events(path) -> EventStream:
    with open(path, "rb") as f:
        return parse_events(f.read())


def write_events(path, stream: EventStream, format: str = "packed-binary"):
    with open(path, "wb") as f:
        f.write(serialize_events(stream, format))


# ---------------------------------------------------------------------------
# preprocessing filters
# ---------------------------------------------------------------------------


def crop_roi(stream: EventStream, roi: RoiRect) -> EventStream:
    """Keep events inside the ROI, shifting coordinates to the new origin."""
    roi.validate(stream.geometry)
    keep = (
        (stream.x >= roi.x0) & (stream.x < roi.x1)
        & (stream.y >= roi.y0) & (stream.y < roi.y1)
    )
    return EventStream(
        (roi.y1 - roi.y0, roi.x1 - roi.x0),
        stream.t[keep],
        stream.x[keep] - roi.x0,
        stream.y[keep] - roi.y0,
        stream.p[keep],
    )


@njit(cache=True)
def _refractory_keep(t, x, y, h, w, dt_min):
    sentinel = np.int64(-(1 << 62))
    last = np.full((h + 2, w + 2), sentinel, dtype=np.int64)
    keep = np.ones(len(t), dtype=np.bool_)
    for i in range(len(t)):
        ti = t[i]
        cx = x[i] + 1
        cy = y[i] + 1
        lo = ti - dt_min
        dropped = False
        for dy in range(-1, 2):
            for dx in range(-1, 2):
                v = last[cy + dy, cx + dx]
                if lo < v < ti:
                    dropped = True
                    break
            if dropped:
                break
        if dropped:
            keep[i] = False
        else:
            last[cy, cx] = ti
    return keep


def refractory_filter(stream: EventStream, dt_min: int) -> EventStream:
    """Drop events arriving within dt_min of a retained event at the same
    pixel or any 8-neighbor.

    The suppression window is open at both ends, so simultaneous events and
    events exactly dt_min apart survive. Only retained events update the
    per-pixel recency state, which makes the filter idempotent.
    """
    if dt_min < 0:
        raise ValueError("dt_min must be >= 0")
    if len(stream) == 0 or dt_min == 0:
        return stream
    h, w = stream.geometry
    keep = _refractory_keep(stream.t, stream.x, stream.y, h, w, np.int64(dt_min))
    return EventStream(stream.geometry, stream.t[keep], stream.x[keep],
                       stream.y[keep], stream.p[keep])


@njit(cache=True)
def _denoise_keep(t, x, y, h, w, tau_d, k_min):
    sentinel = np.int64(-(1 << 62))
    last = np.full((h + 2, w + 2), sentinel, dtype=np.int64)
    keep = np.zeros(len(t), dtype=np.bool_)
    for i in range(len(t)):
        ti = t[i]
        cx = x[i] + 1
        cy = y[i] + 1
        lo = ti - tau_d
        support = 0
        for dy in range(-1, 2):
            for dx in range(-1, 2):
                if dx == 0 and dy == 0:
                    continue
                if last[cy + dy, cx + dx] >= lo:
                    support += 1
        keep[i] = support >= k_min
        # every incoming event refreshes the recency state, kept or not
        last[cy, cx] = ti
    return keep


def time_surface_denoise(stream: EventStream, tau_d: int = 10_000, k_min: int = 1) -> EventStream:
    """Background-activity filter keyed on neighbor recency.

    An event survives when at least k_min of its 8 neighbors saw an event
    (either polarity) within the closed window [t - tau_d, t]. This is a
    neighbor-support stand-in for time-surface style denoisers; the exact
    scoring rule varies across the literature, so both parameters are
    exposed.
    """
    if tau_d <= 0:
        raise ValueError("tau_d must be > 0")
    if k_min < 1:
        raise ValueError("k_min must be >= 1")
    if len(stream) == 0:
        return stream
    h, w = stream.geometry
    keep = _denoise_keep(stream.t, stream.x, stream.y, h, w,
                         np.int64(tau_d), np.int64(k_min))
    return EventStream(stream.geometry, stream.t[keep], stream.x[keep],
                       stream.y[keep], stream.p[keep])


# ---------------------------------------------------------------------------
# clip manifests
# ---------------------------------------------------------------------------

_MANIFEST_FIELDS = ["path", "label", "subject_id", "config_id"]


@dataclass
class ManifestEntry:
    path: str
    label: int
    subject_id: str
    config_id: str


def write_manifest(path, entries):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(_MANIFEST_FIELDS)
        for e in entries:
            writer.writerow([e.path, e.label, e.subject_id, e.config_id])


def read_manifest(path) -> list[ManifestEntry]:
    entries = []
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != _MANIFEST_FIELDS:
                raise ParseError(f"{path}: bad manifest header {reader.fieldnames}")
            for row in reader:
                entries.append(ManifestEntry(
                    row["path"], int(row["label"]),
                    row["subject_id"], row["config_id"]))
    except (csv.Error, UnicodeDecodeError, ValueError, TypeError) as exc:
        raise ParseError(f"{path}: not a valid manifest ({exc})") from exc
    return entries
