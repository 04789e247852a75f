"""Dense representations of event streams.

Three representations live here:

* recency frames: per (pixel, polarity) normalized timestamp of the most
  recent event inside a trailing memory window,
* voxel grids: bilinear temporal binning of signed event counts,
* stacked frames: recency frames synchronized with an auxiliary gray
  channel (produced externally, e.g. by a reconstruction network).

Frame values encode recency in [0, 1]: an event at the end of the window
maps to 1, one at the window start to 0, and pixels with no event in the
window are undefined (NaN until filled).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import BadMagicError, TruncatedPayloadError, ValidationError
from .events import EventStream

DEFAULT_DT = 150_000        # frame period, us
DEFAULT_T_M = 512_000       # memory window, us
DEFAULT_VOXEL_BINS = 5

_SENTINEL = np.int64(-(1 << 62))


@dataclass
class EventFrame:
    """One recency frame: values (H, W, 2) float32, NaN where undefined."""

    values: np.ndarray
    t_k: int
    t_m: int


@dataclass
class VoxelGrid:
    """Signed spatio-temporal histogram, values (H, W, B) float64."""

    values: np.ndarray
    b: int
    t0: int
    tn: int


@dataclass
class StackedFrame:
    """Two filled recency channels plus one gray channel, (H, W, 3)."""

    values: np.ndarray


def frame_times(stream: EventStream, dt: int) -> np.ndarray:
    """Frame timestamps t0 + k*dt for k = 1..floor((tn - t0)/dt)."""
    t0 = int(stream.t[0])
    tn = int(stream.t[-1])
    n = (tn - t0) // dt
    return t0 + dt * np.arange(1, n + 1, dtype=np.int64)


def build_frames(stream: EventStream, dt: int = DEFAULT_DT, t_m: int = DEFAULT_T_M) -> list[EventFrame]:
    """Build the recency-frame sequence in a single incremental pass.

    A per (pixel, polarity) last-timestamp state is advanced chunk by chunk
    between frame instants; each frame is a snapshot of that state,
    normalized to (t - (t_k - t_m)) / t_m over the closed window
    [t_k - t_m, t_k]. The result is bit-identical to scanning the window
    from scratch for every frame.
    """
    if dt <= 0 or t_m <= 0:
        raise ValueError("dt and t_m must be positive")
    if len(stream) == 0:
        raise ValueError("no events")
    h, w = stream.geometry
    times = frame_times(stream, dt)
    last = np.full((h, w, 2), _SENTINEL, dtype=np.int64)
    ends = np.searchsorted(stream.t, times, side="right")
    frames = []
    start = 0
    for t_k, end in zip(times, ends):
        if end > start:
            sl = slice(start, end)
            last[stream.y[sl], stream.x[sl], stream.p[sl]] = stream.t[sl]
            start = end
        lo = int(t_k) - t_m
        vals = ((last - lo) / t_m).astype(np.float32)
        vals[last < lo] = np.nan
        frames.append(EventFrame(vals, int(t_k), t_m))
    return frames


def build_voxel_grid(stream: EventStream, b: int = DEFAULT_VOXEL_BINS) -> VoxelGrid:
    """Deposit each event's unit mass bilinearly into the two temporal bins
    adjacent to its normalized timestamp t* = (b-1)(t - t0)/(tn - t0).

    Positive polarity deposits +1 total, negative -1, so the grid's grand
    total equals (#positive - #negative) events.
    """
    if b < 2:
        raise ValueError("bin count must be >= 2")
    if len(stream) == 0:
        raise ValueError("no events")
    t0 = int(stream.t[0])
    tn = int(stream.t[-1])
    if tn == t0:
        raise ValidationError("degenerate stream duration (tn == t0)")
    h, w = stream.geometry
    grid = np.zeros((h, w, b), dtype=np.float64)
    t_star = (b - 1) * (stream.t - t0) / (tn - t0)
    left = np.floor(t_star).astype(np.int64)
    frac = t_star - left
    sign = np.where(stream.p == 1, 1.0, -1.0)
    np.add.at(grid, (stream.y, stream.x, left), sign * (1.0 - frac))
    right_ok = frac > 0
    np.add.at(
        grid,
        (stream.y[right_ok], stream.x[right_ok], left[right_ok] + 1),
        sign[right_ok] * frac[right_ok],
    )
    return VoxelGrid(grid, b, t0, tn)


def fill_undefined(frame: EventFrame, fill: float = 0.0) -> np.ndarray:
    """Replace undefined (NaN) cells with a constant in [0, 1]."""
    if not 0.0 <= fill <= 1.0:
        raise ValueError("fill must lie in [0, 1]")
    return np.where(np.isnan(frame.values), np.float32(fill), frame.values)


def downsample(array: np.ndarray, factor: int, mode: str = "max") -> np.ndarray:
    """Pool each f x f block per channel; ragged border blocks pool over the
    cells that exist. Max pooling preserves the most recent activity in a
    block (recency semantics); mean pooling is available via mode."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if factor == 1:
        return array
    if array.ndim == 2:
        return downsample(array[:, :, None], factor, mode)[:, :, 0]
    h, w = array.shape[:2]
    ih = np.arange(0, h, factor)
    iw = np.arange(0, w, factor)
    if mode == "max":
        out = np.maximum.reduceat(array, ih, axis=0)
        return np.maximum.reduceat(out, iw, axis=1)
    if mode == "mean":
        sums = np.add.reduceat(np.add.reduceat(array.astype(np.float64), ih, axis=0), iw, axis=1)
        ch = np.minimum(ih + factor, h) - ih
        cw = np.minimum(iw + factor, w) - iw
        counts = np.outer(ch, cw)[:, :, None]
        return (sums / counts).astype(array.dtype)
    raise ValueError(f"unknown pooling mode {mode!r}")


def stack_channels(frames, gray, fill: float = 0.0) -> list[StackedFrame]:
    """Pair frame k (0-based) with gray frame floor(k * N'/N).

    The gray sequence may run at a different rate; indices are clamped to
    the valid range so either sequence may be the longer one.
    """
    n = len(frames)
    n_gray = len(gray)
    if n == 0 or n_gray == 0:
        raise ValueError("both sequences must be non-empty")
    r = n_gray / n
    out = []
    for k, frame in enumerate(frames):
        g = np.asarray(gray[min(int(r * k), n_gray - 1)], dtype=np.float32)
        if g.min() < 0.0 or g.max() > 1.0:
            raise ValidationError("gray values must lie in [0, 1]")
        filled = fill_undefined(frame, fill)
        out.append(StackedFrame(np.dstack([filled, g])))
    return out


# ---------------------------------------------------------------------------
# frame container I/O
# ---------------------------------------------------------------------------
#
# Layout: magic "EVF1", u32 N, u32 H, u32 W, u32 C, i64 t0, i64 dt, i64 t_m,
# then N*H*W*C little-endian float32, row-major. Undefined cells are quiet
# NaN unless filled on export. A C=1 file carries an externally produced
# gray channel; a voxel grid exports as N=1, C=B.

EVF_MAGIC = b"EVF1"
_EVF_HEADER = struct.Struct("<4sIIIIqqq")


@dataclass
class FrameFileHeader:
    n: int
    h: int
    w: int
    c: int
    t0: int
    dt: int
    t_m: int


def write_frame_file(path, values: np.ndarray, t0: int, dt: int, t_m: int,
                     fill: float | None = None):
    """Write an (N, H, W, C) float32 stack; fill=None keeps NaN markers."""
    values = np.ascontiguousarray(values, dtype=np.float32)
    if values.ndim != 4:
        raise ValueError("expected an (N, H, W, C) array")
    if fill is not None:
        values = np.where(np.isnan(values), np.float32(fill), values)
    n, h, w, c = values.shape
    with open(path, "wb") as f:
        f.write(_EVF_HEADER.pack(EVF_MAGIC, n, h, w, c, t0, dt, t_m))
        f.write(values.tobytes())


def frames_to_array(frames: list[EventFrame]) -> np.ndarray:
    return np.stack([f.values for f in frames]) if frames else np.empty((0, 0, 0, 2), np.float32)


def read_frame_file(path) -> tuple[np.ndarray, FrameFileHeader]:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _EVF_HEADER.size:
        raise TruncatedPayloadError(f"{path}: truncated header")
    magic, n, h, w, c, t0, dt, t_m = _EVF_HEADER.unpack_from(data, 0)
    if magic != EVF_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    count = n * h * w * c
    avail = (len(data) - _EVF_HEADER.size) // 4
    payload = np.frombuffer(data, dtype="<f4", offset=_EVF_HEADER.size,
                            count=avail)
    if payload.size != count:
        raise TruncatedPayloadError(
            f"{path}: expected {count} floats, found {payload.size}")
    values = payload.reshape(n, h, w, c)
    return values, FrameFileHeader(n, h, w, c, t0, dt, t_m)
