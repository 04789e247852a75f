"""Linear softmax head over per-frame features, with two clip rules.

Training minimizes class-weighted cross entropy with an adaptive
first-order optimizer (bias-corrected first/second moments, decoupled
weight decay). It is deterministic given the seed: shuffling comes from a
seeded generator and all reductions are plain single-threaded numpy.

Clip-level decisions: the mode of per-frame argmax labels, or the argmax
of the summed per-frame probability vectors (accumulated probability).
Ties break to the lowest class index in both rules.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BadMagicError, ConfigError, TrainingDivergedError, TruncatedPayloadError
from .features import FeatureSequence

SMX_MAGIC = b"SMX1"
_SMX_HEADER = struct.Struct("<4sIII")


@dataclass
class SoftmaxHead:
    """K x (dim+1) weight matrix; the last column is the bias."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2 or self.weights.shape[0] < 2:
            raise ValueError("weights must be (K, dim+1) with K >= 2")
        if not np.isfinite(self.weights).all():
            raise ValueError("weights must be finite")

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1] - 1

    def logits(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=np.float64)
        if f.shape[-1] != self.dim:
            raise ValueError(f"feature dim {f.shape[-1]} != head dim {self.dim}")
        return f @ self.weights[:, :-1].T + self.weights[:, -1]


def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def predict_frame(head: SoftmaxHead, f: np.ndarray) -> np.ndarray:
    """Probability vector for one feature vector (stable softmax)."""
    return softmax(head.logits(f))


def predict_proba(head: SoftmaxHead, features: np.ndarray) -> np.ndarray:
    """Row-wise probabilities for an (N, dim) feature matrix."""
    return softmax(head.logits(features))


def predict_clip_mode(head: SoftmaxHead, seq: FeatureSequence) -> int:
    if len(seq) == 0:
        raise ValueError("empty feature sequence")
    votes = np.argmax(predict_proba(head, seq.vectors), axis=1)
    return int(np.argmax(np.bincount(votes, minlength=head.k)))


def predict_clip_accumulated(head: SoftmaxHead, seq: FeatureSequence) -> int:
    if len(seq) == 0:
        raise ValueError("empty feature sequence")
    return int(np.argmax(predict_proba(head, seq.vectors).sum(axis=0)))


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    epochs: int = 50
    batch_size: int = 256
    seed: int = 0
    class_weights: object = None          # None, "balanced", or K reals
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    init_scale: float = 0.01

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")


def balanced_class_weights(labels: np.ndarray, k: int) -> np.ndarray:
    """Per-class weights proportional to 1/count, normalized to mean 1."""
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0).tolist()
        raise ConfigError(f"classes {missing} absent from training data "
                          f"(required for balanced weights)")
    inv = 1.0 / counts
    return inv / inv.mean()


def resolve_class_weights(spec, labels: np.ndarray, k: int) -> np.ndarray:
    if spec is None:
        return np.ones(k)
    if isinstance(spec, str):
        if spec != "balanced":
            raise ConfigError(f"unknown class_weights {spec!r}")
        return balanced_class_weights(labels, k)
    w = np.asarray(spec, dtype=np.float64)
    if w.shape != (k,) or np.any(w <= 0) or not np.isfinite(w).all():
        raise ConfigError("class_weights must be K positive reals")
    return w


def loss_and_grad(weights: np.ndarray, x: np.ndarray, y: np.ndarray,
                  sample_weights: np.ndarray) -> tuple[float, np.ndarray]:
    """Weighted-mean cross entropy and its gradient w.r.t. the weights.

    x is (n, dim), unaugmented; the bias column is handled internally.
    Loss = sum_i w_i * ce_i / sum_i w_i. Weight decay is decoupled and not
    part of this loss.
    """
    n = len(x)
    a = np.hstack([x, np.ones((n, 1))])
    with np.errstate(over="ignore", invalid="ignore"):
        # overflow here surfaces as a non-finite loss, which train() reports
        z = a @ weights.T
        z -= z.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        wsum = sample_weights.sum()
        loss = -(sample_weights * logp[np.arange(n), y]).sum() / wsum
        p = np.exp(logp)
        delta = p
        delta[np.arange(n), y] -= 1.0
        delta *= (sample_weights / wsum)[:, None]
        return float(loss), delta.T @ a


def flatten_training_set(seqs) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate labeled feature sequences into (X, y) frame samples."""
    xs, ys = [], []
    dim = None
    for seq in seqs:
        if seq.label is None:
            raise ConfigError(f"clip {seq.clip_id!r} has no label")
        if dim is None:
            dim = seq.dim
        elif seq.dim != dim:
            raise ConfigError(f"inconsistent feature dims {dim} vs {seq.dim}")
        xs.append(seq.vectors)
        ys.append(np.full(len(seq), seq.label, dtype=np.int64))
    if not xs:
        raise ConfigError("empty training set")
    return np.vstack(xs).astype(np.float64), np.concatenate(ys)


def train(seqs, cfg: TrainConfig, k: int | None = None,
          val_seqs=None, log_path=None) -> SoftmaxHead:
    """Fit the head on the frames of the given labeled sequences."""
    x, y = flatten_training_set(seqs)
    if k is None:
        k = int(y.max()) + 1
    if k < 2:
        raise ConfigError("need at least 2 classes")
    class_w = resolve_class_weights(cfg.class_weights, y, k)
    sample_w = class_w[y]

    n, dim = x.shape
    rng = np.random.default_rng(cfg.seed)
    weights = np.zeros((k, dim + 1))
    weights[:, :-1] = rng.normal(0.0, cfg.init_scale, (k, dim))

    m = np.zeros_like(weights)
    v = np.zeros_like(weights)
    step = 0
    log_rows = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        epoch_wsum = 0.0
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            loss, grad = loss_and_grad(weights, x[idx], y[idx], sample_w[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            bw = sample_w[idx].sum()
            epoch_loss += loss * bw
            epoch_wsum += bw
            step += 1
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad
            m_hat = m / (1.0 - cfg.beta1 ** step)
            v_hat = v / (1.0 - cfg.beta2 ** step)
            weights -= cfg.learning_rate * (
                m_hat / (np.sqrt(v_hat) + cfg.eps) + cfg.weight_decay * weights)
        if log_path is not None:
            head = SoftmaxHead(weights.copy())
            row = {
                "epoch": epoch,
                "loss": epoch_loss / epoch_wsum,
                "train_acc": float(np.mean(
                    np.argmax(predict_proba(head, x), axis=1) == y)),
                "val_acc": "",
            }
            if val_seqs is not None:
                xv, yv = flatten_training_set(val_seqs)
                row["val_acc"] = float(np.mean(
                    np.argmax(predict_proba(head, xv), axis=1) == yv))
            log_rows.append(row)

    if log_path is not None:
        with open(log_path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=["epoch", "loss", "train_acc", "val_acc"])
            writer.writeheader()
            writer.writerows(log_rows)
    return SoftmaxHead(weights)


# ---------------------------------------------------------------------------
# model file
# ---------------------------------------------------------------------------

MODEL_FORMAT_VERSION = 1


def write_model(path, head: SoftmaxHead):
    with open(path, "wb") as f:
        f.write(_SMX_HEADER.pack(SMX_MAGIC, MODEL_FORMAT_VERSION, head.k, head.dim))
        f.write(head.weights.astype("<f8").tobytes())


def read_model(path) -> SoftmaxHead:
    with open(path, "rb") as f:
        data = f.read()
    head, _ = parse_model(data, path)
    return head


def parse_model(data: bytes, name="model") -> tuple[SoftmaxHead, int]:
    """Parse a model block; returns the head and the end offset."""
    if len(data) < _SMX_HEADER.size:
        raise TruncatedPayloadError(f"{name}: truncated header")
    magic, version, k, dim = _SMX_HEADER.unpack_from(data, 0)
    if magic != SMX_MAGIC:
        raise BadMagicError(f"{name}: bad magic {magic!r}")
    if version != MODEL_FORMAT_VERSION:
        raise BadMagicError(f"{name}: unsupported format version {version}")
    count = k * (dim + 1)
    end = _SMX_HEADER.size + 8 * count
    if len(data) < end:
        raise TruncatedPayloadError(f"{name}: truncated weights")
    weights = np.frombuffer(data, dtype="<f8", count=count,
                            offset=_SMX_HEADER.size).reshape(k, dim + 1)
    return SoftmaxHead(weights.copy()), end
