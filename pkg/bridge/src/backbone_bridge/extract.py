"""Frame files in, feature files out.

For every input clip the adapter reads the frame container, expands the
event channels to the 3-channel input a vision backbone expects, applies
the configured preprocessing (optional resize and per-channel
normalization, both exposed because different backbones want different
constants), and writes one feature file with the per-frame ordering
preserved. Extraction is deterministic for fixed backbone weights.

Channel expansion for 2-channel event frames (channel 0 negative polarity,
channel 1 positive):

* "duplicate-positive" (default): (pos, neg, pos)
* "zero-pad": (pos, neg, 0)
* "gray-file": (pos, neg, gray), with the gray channel taken from a C=1
  frame file (e.g. an external reconstruction), rate-matched by
  floor(k * N_gray / N)

1-channel inputs replicate to all three channels; 3-channel inputs pass
through.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .backbones import BackboneError, embedding_dim, resolve_backbone
from .formats import FrameFileError, read_frame_file, write_feature_file

CHANNEL_RULES = ("duplicate-positive", "zero-pad", "gray-file")


@dataclass
class BridgeConfig:
    backbone: str = "torchvision:resnet18"
    inputs: list = field(default_factory=list)       # frame-file paths
    outputs: list = field(default_factory=list)      # feature-file paths
    labels: list | None = None                       # optional, per clip
    batch_size: int = 16
    channel_rule: str = "duplicate-positive"
    gray_files: list | None = None                   # for the gray-file rule
    resize: tuple | None = None                      # (H, W) or None
    normalize_mean: tuple | None = None              # per-channel, or None
    normalize_std: tuple | None = None
    seed: int = 0
    weights_path: str | None = None

    def __post_init__(self):
        if len(self.inputs) != len(self.outputs):
            raise ValueError("inputs and outputs must pair up")
        if self.labels is not None and len(self.labels) != len(self.inputs):
            raise ValueError("labels must pair up with inputs")
        if self.channel_rule not in CHANNEL_RULES:
            raise ValueError(f"channel_rule must be one of {CHANNEL_RULES}")
        if self.channel_rule == "gray-file":
            if self.gray_files is None or len(self.gray_files) != len(self.inputs):
                raise ValueError("gray-file rule needs one gray file per input")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if (self.normalize_mean is None) != (self.normalize_std is None):
            raise ValueError("normalize_mean and normalize_std go together")


def expand_channels(values: np.ndarray, rule: str,
                    gray: np.ndarray | None = None) -> np.ndarray:
    """(N, H, W, C) event frames -> (N, H, W, 3) backbone input."""
    n, h, w, c = values.shape
    if c == 3:
        return values
    if c == 1:
        return np.repeat(values, 3, axis=3)
    if c != 2:
        raise FrameFileError(f"cannot expand {c}-channel frames to 3")
    neg = values[..., 0]
    pos = values[..., 1]
    if rule == "duplicate-positive":
        third = pos
    elif rule == "zero-pad":
        third = np.zeros_like(pos)
    elif rule == "gray-file":
        if gray is None:
            raise FrameFileError("gray-file rule without a gray channel")
        n_gray = len(gray)
        idx = np.minimum((np.arange(n) * n_gray) // max(n, 1), n_gray - 1)
        third = gray[idx, :, :, 0]
    else:
        raise ValueError(f"unknown channel rule {rule!r}")
    return np.stack([pos, neg, third], axis=3)


def preprocess(batch: np.ndarray, cfg: BridgeConfig) -> torch.Tensor:
    """(B, H, W, 3) float32 in [0, 1] -> backbone-ready (B, 3, H, W)."""
    x = torch.from_numpy(np.ascontiguousarray(batch)).permute(0, 3, 1, 2)
    if cfg.resize is not None:
        x = torch.nn.functional.interpolate(
            x, size=tuple(cfg.resize), mode="bilinear", align_corners=False)
    if cfg.normalize_mean is not None:
        mean = torch.tensor(cfg.normalize_mean, dtype=x.dtype).view(1, 3, 1, 1)
        std = torch.tensor(cfg.normalize_std, dtype=x.dtype).view(1, 3, 1, 1)
        x = (x - mean) / std
    return x


def extract(cfg: BridgeConfig) -> list:
    """Run the backbone over every clip; returns the written paths.

    The feature header's dim always matches the backbone's embedding size:
    the first batch fixes it and later clips are checked against it.
    """
    model = resolve_backbone(cfg.backbone, cfg.seed, cfg.weights_path)
    written = []
    expected_dim = None
    for i, (src, dst) in enumerate(zip(cfg.inputs, cfg.outputs)):
        stack = read_frame_file(src)
        values = np.nan_to_num(stack.values, nan=0.0)
        gray = None
        if cfg.channel_rule == "gray-file":
            gray = np.nan_to_num(read_frame_file(cfg.gray_files[i]).values,
                                 nan=0.0)
        rgb = expand_channels(values, cfg.channel_rule, gray)
        chunks = []
        with torch.no_grad():
            for lo in range(0, len(rgb), cfg.batch_size):
                x = preprocess(rgb[lo:lo + cfg.batch_size], cfg)
                chunks.append(model(x).reshape(x.shape[0], -1).numpy())
        vectors = (np.vstack(chunks) if chunks
                   else np.empty((0, expected_dim or embedding_dim(
                       model, *(cfg.resize or rgb.shape[1:3]))), np.float32))
        if expected_dim is None:
            expected_dim = vectors.shape[1]
        elif vectors.shape[1] != expected_dim:
            raise BackboneError(
                f"{src}: embedding dim {vectors.shape[1]} != header dim "
                f"{expected_dim} of earlier clips")
        label = None if cfg.labels is None else cfg.labels[i]
        write_feature_file(dst, vectors, Path(src).stem, label)
        written.append(dst)
    return written
