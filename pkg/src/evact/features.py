"""Per-frame feature vectors and the feature interchange format.

The interchange file ("FTR1") is the bridge point between representations
and classifiers: any backbone, built-in or external, that emits this format
can feed the classifier. It carries features only, never image data.

Layout: magic "FTR1", u32 dim, u32 count, u8 has_label, u32 label,
u32 clip_id byte length + UTF-8 clip_id, then count*dim little-endian
float32 vectors.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import BadMagicError, NonFiniteError, TruncatedPayloadError
from .representations import downsample

FTR_MAGIC = b"FTR1"
_FTR_HEADER = struct.Struct("<4sIIBI")


@dataclass
class FeatureSequence:
    """Per-frame feature vectors for one clip; label is None at inference."""

    vectors: np.ndarray
    clip_id: str
    label: int | None = None

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be an (N, dim) array")
        if not np.isfinite(self.vectors).all():
            raise NonFiniteError(f"clip {self.clip_id!r}: non-finite feature values")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.vectors)


def frames_to_features(frames, pool_factor: int = 1, clip_id: str = "",
                       label: int | None = None) -> FeatureSequence:
    """Max-pool each dense frame by pool_factor, then flatten row-major with
    channels interleaved last: dim = ceil(H/f) * ceil(W/f) * C."""
    arr = np.asarray(frames, dtype=np.float32)
    if arr.ndim != 4:
        raise ValueError("expected dense (N, H, W, C) frames with equal shapes")
    n = arr.shape[0]
    if n == 0:
        raise ValueError("no frames")
    pooled = np.stack([downsample(arr[i], pool_factor) for i in range(n)])
    return FeatureSequence(pooled.reshape(n, -1), clip_id, label)


def write_features(path, seq: FeatureSequence):
    """Atomic write (temp file + rename) of the interchange format."""
    clip_bytes = seq.clip_id.encode("utf-8")
    header = _FTR_HEADER.pack(
        FTR_MAGIC, seq.dim, len(seq),
        0 if seq.label is None else 1,
        0 if seq.label is None else seq.label,
    )
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as f:
        f.write(header)
        f.write(struct.pack("<I", len(clip_bytes)))
        f.write(clip_bytes)
        f.write(seq.vectors.astype("<f4", copy=False).tobytes())
    os.replace(tmp, path)


def read_features(path) -> FeatureSequence:
    """Read and validate an interchange file.

    Distinct failures raise distinct errors: BadMagicError for a wrong
    magic, TruncatedPayloadError when the payload is shorter than the
    header declares, NonFiniteError for NaN/inf feature values.
    """
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _FTR_HEADER.size:
        raise TruncatedPayloadError(f"{path}: truncated header")
    magic, dim, count, has_label, label = _FTR_HEADER.unpack_from(data, 0)
    if magic != FTR_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    off = _FTR_HEADER.size
    if len(data) < off + 4:
        raise TruncatedPayloadError(f"{path}: truncated clip id length")
    (id_len,) = struct.unpack_from("<I", data, off)
    off += 4
    if len(data) < off + id_len:
        raise TruncatedPayloadError(f"{path}: truncated clip id")
    clip_id = data[off:off + id_len].decode("utf-8")
    off += id_len
    payload = np.frombuffer(data, dtype="<f4", offset=off,
                            count=(len(data) - off) // 4)
    if payload.size != count * dim:
        raise TruncatedPayloadError(
            f"{path}: expected {count * dim} floats, found {payload.size}")
    vectors = payload.reshape(count, dim)
    if not np.isfinite(vectors).all():
        raise NonFiniteError(f"{path}: non-finite feature values")
    return FeatureSequence(vectors.copy(), clip_id, int(label) if has_label else None)
