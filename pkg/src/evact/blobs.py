"""Incremental clustering of events into tracked blobs.

Each incoming event either joins the nearest live blob whose box contains
it or spawns a new blob. Blob geometry follows the event by convex
combination (smoothing alpha), the per-axis radius tracks the smoothed
absolute deviation from the center with a floor of r_min, and the weight
decays exponentially between updates and gains +1 per event. A blob whose
decayed weight falls below w_min is retired and emitted with its full
update history.

A blob's trajectory summary is a fixed-length vector: its five channels
(c_x, c_y, r_x, r_y, w) resampled with zero-order hold at n_samples evenly
spaced instants over the blob's observed lifetime.

The tracker is strictly sequential per clip and deterministic; distinct
clips can be processed in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classifier import SoftmaxHead, predict_proba
from .events import EventStream
from .features import FeatureSequence

NO_BLOBS = -1   # fallback clip label when a clip produced no blobs


@dataclass
class BlobTrackerConfig:
    alpha: float = 0.9            # smoothing of center/radius updates
    r_min: float = 50.0           # radius floor, pixels
    n_samples: int = 100          # resampled points per feature channel
    w_min: float = 1.0            # retirement threshold
    tau_w: float = 500_000.0      # weight decay time constant, us

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.r_min <= 0 or self.n_samples < 1 or self.tau_w <= 0:
            raise ValueError("invalid tracker configuration")


@dataclass
class BlobState:
    blob_id: int
    c_x: float
    c_y: float
    r_x: float
    r_y: float
    w: float
    t_last: int
    birth: int
    history_t: list = field(default_factory=list)
    history: list = field(default_factory=list)   # (c_x, c_y, r_x, r_y, w)

    def record(self):
        self.history_t.append(self.t_last)
        self.history.append((self.c_x, self.c_y, self.r_x, self.r_y, self.w))


def update_blob(blob: BlobState, t: int, x: float, y: float,
                cfg: BlobTrackerConfig) -> None:
    """Absorb one event: radius tracks the smoothed absolute deviation from
    the pre-update center (floored at r_min), then the center moves by
    convex combination, then the weight decays and gains one."""
    alpha = cfg.alpha
    beta = 1.0 - alpha
    blob.r_x = max(cfg.r_min, alpha * blob.r_x + beta * abs(blob.c_x - x))
    blob.r_y = max(cfg.r_min, alpha * blob.r_y + beta * abs(blob.c_y - y))
    assert blob.r_x >= cfg.r_min and blob.r_y >= cfg.r_min
    blob.c_x = alpha * blob.c_x + beta * x
    blob.c_y = alpha * blob.c_y + beta * y
    blob.w = blob.w * math.exp(-(t - blob.t_last) / cfg.tau_w) + 1.0
    blob.t_last = t
    blob.record()


def track(stream: EventStream, cfg: BlobTrackerConfig | None = None) -> list[BlobState]:
    """Run the tracker over a full stream; returns completed blobs
    (retired blobs first in retirement order, then the end-of-stream flush
    in blob id order)."""
    if cfg is None:
        cfg = BlobTrackerConfig()
    tau = cfg.tau_w
    w_min = cfg.w_min

    live: list[BlobState] = []
    done: list[BlobState] = []
    next_id = 0

    t_arr, x_arr, y_arr = stream.t, stream.x, stream.y
    for i in range(len(stream)):
        t = int(t_arr[i])
        x = float(x_arr[i])
        y = float(y_arr[i])

        best = None
        best_d2 = math.inf
        for blob in live:
            if abs(x - blob.c_x) <= blob.r_x and abs(y - blob.c_y) <= blob.r_y:
                d2 = (x - blob.c_x) ** 2 + (y - blob.c_y) ** 2
                if d2 < best_d2:   # strict: exact ties keep the lowest id
                    best = blob
                    best_d2 = d2

        if best is None:
            blob = BlobState(next_id, x, y, cfg.r_min, cfg.r_min, 1.0, t, t)
            next_id += 1
            blob.record()
            live.append(blob)
        else:
            update_blob(best, t, x, y, cfg)

        # retirement sweep after the assignment: a freshly updated blob has
        # w >= 1, so it always survives its own event
        survivors = []
        for blob in live:
            if blob.w * math.exp(-(t - blob.t_last) / tau) < w_min:
                done.append(blob)
            else:
                survivors.append(blob)
        live = survivors

    done.extend(live)   # end-of-stream flush
    return done


def extract_features(blob: BlobState, cfg: BlobTrackerConfig | None = None) -> np.ndarray:
    """Resample the blob's five channels at n_samples evenly spaced times
    over [birth, last update] using zero-order hold; length 5 * n_samples."""
    if cfg is None:
        cfg = BlobTrackerConfig()
    if not blob.history:
        raise ValueError("blob has an empty history")
    times = np.asarray(blob.history_t, dtype=np.int64)
    samples = np.asarray(blob.history, dtype=np.float64)
    query = np.linspace(blob.birth, blob.t_last, cfg.n_samples)
    idx = np.searchsorted(times, query, side="right") - 1
    idx = np.clip(idx, 0, len(times) - 1)
    return samples[idx].T.reshape(-1)   # channel-major: all c_x, then c_y, ...


def blob_feature_sequence(blobs, cfg: BlobTrackerConfig | None = None,
                          clip_id: str = "", label: int | None = None) -> FeatureSequence:
    """Stack per-blob feature vectors into one interchange sequence."""
    if cfg is None:
        cfg = BlobTrackerConfig()
    if blobs:
        vectors = np.stack([extract_features(b, cfg) for b in blobs])
    else:
        vectors = np.empty((0, 5 * cfg.n_samples), dtype=np.float32)
    return FeatureSequence(vectors, clip_id, label)


def classify_blobs(features: FeatureSequence, head: SoftmaxHead,
                   fallback: int = NO_BLOBS) -> int:
    """Mode of per-blob argmax labels (ties to the lowest class index).

    A clip with zero blobs returns the fallback marker so reports can flag
    it rather than dropping the clip.
    """
    if len(features) == 0:
        return fallback
    votes = np.argmax(predict_proba(head, features.vectors), axis=1)
    return int(np.argmax(np.bincount(votes, minlength=head.k)))
