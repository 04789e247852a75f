"""Reader/writer for the two interchange formats the bridge speaks.

The bridge talks to the core toolkit through files only: it reads the
frame container ("EVF1") and writes the feature interchange format
("FTR1"). Layouts are re-implemented here from their wire definitions so
the adapter has no code dependency on the core package.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

EVF_MAGIC = b"EVF1"
_EVF_HEADER = struct.Struct("<4sIIIIqqq")

FTR_MAGIC = b"FTR1"
_FTR_HEADER = struct.Struct("<4sIIBI")


class FrameFileError(Exception):
    """Malformed frame container."""


@dataclass
class FrameStack:
    values: np.ndarray          # (N, H, W, C) float32
    t0: int
    dt: int
    t_m: int


def read_frame_file(path) -> FrameStack:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _EVF_HEADER.size:
        raise FrameFileError(f"{path}: truncated header")
    magic, n, h, w, c, t0, dt, t_m = _EVF_HEADER.unpack_from(data, 0)
    if magic != EVF_MAGIC:
        raise FrameFileError(f"{path}: bad magic {magic!r}")
    avail = (len(data) - _EVF_HEADER.size) // 4
    payload = np.frombuffer(data, dtype="<f4", offset=_EVF_HEADER.size,
                            count=avail)
    if payload.size != n * h * w * c:
        raise FrameFileError(f"{path}: expected {n * h * w * c} floats, "
                             f"found {payload.size}")
    return FrameStack(payload.reshape(n, h, w, c).copy(), t0, dt, t_m)


def write_feature_file(path, vectors: np.ndarray, clip_id: str,
                       label: int | None):
    """Atomic FTR1 write (temp file + rename)."""
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    if vectors.ndim != 2:
        raise ValueError("vectors must be (count, dim)")
    if not np.isfinite(vectors).all():
        raise ValueError(f"{clip_id!r}: non-finite feature values")
    count, dim = vectors.shape
    clip_bytes = clip_id.encode("utf-8")
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as f:
        f.write(_FTR_HEADER.pack(FTR_MAGIC, dim, count,
                                 0 if label is None else 1,
                                 0 if label is None else label))
        f.write(struct.pack("<I", len(clip_bytes)))
        f.write(clip_bytes)
        f.write(vectors.astype("<f4", copy=False).tobytes())
    os.replace(tmp, path)
