"""Backbone resolution.

Identifiers take the form "torchvision:<model>" (any constructor exported
by torchvision.models, e.g. torchvision:resnet18) or "toy-cnn", a tiny
built-in network for fast smoke runs. Models run frozen in eval mode.

Weights come from an optional state-dict file; without one the model is
initialized from a fixed seed, which keeps extraction deterministic (the
adapter is weight-source agnostic, so swapping in pretrained weights is a
config change, not a code change).
"""

from __future__ import annotations

import torch
from torch import nn


class BackboneError(Exception):
    """Backbone could not be resolved or loaded."""


class ToyCnn(nn.Module):
    """Small strided conv stack with a pooled 64-d embedding."""

    def __init__(self):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(3, 16, 5, stride=2, padding=2), nn.ReLU(),
            nn.Conv2d(16, 32, 3, stride=2, padding=1), nn.ReLU(),
            nn.Conv2d(32, 64, 3, stride=2, padding=1), nn.ReLU(),
            nn.AdaptiveAvgPool2d(1),
        )

    def forward(self, x):
        return self.features(x).flatten(1)


def resolve_backbone(identifier: str, seed: int = 0,
                     weights_path=None) -> nn.Module:
    """Build a frozen backbone module from its identifier."""
    torch.manual_seed(seed)
    if identifier == "toy-cnn":
        model = ToyCnn()
    elif identifier.startswith("torchvision:"):
        name = identifier.split(":", 1)[1]
        try:
            import torchvision.models as tvm
            ctor = getattr(tvm, name)
        except (ImportError, AttributeError) as exc:
            raise BackboneError(f"cannot resolve {identifier!r}: {exc}") from exc
        try:
            model = ctor(weights=None)
        except Exception as exc:
            raise BackboneError(f"cannot build {identifier!r}: {exc}") from exc
    else:
        raise BackboneError(
            f"unknown backbone {identifier!r} (expected 'toy-cnn' or "
            f"'torchvision:<model>')")
    if weights_path is not None:
        try:
            state = torch.load(weights_path, map_location="cpu",
                               weights_only=True)
            model.load_state_dict(state)
        except Exception as exc:
            raise BackboneError(
                f"cannot load weights from {weights_path}: {exc}") from exc
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model


def embedding_dim(model: nn.Module, h: int, w: int) -> int:
    """Probe the flattened output width for one input geometry."""
    with torch.no_grad():
        out = model(torch.zeros(1, 3, h, w))
    return int(out.reshape(1, -1).shape[1])
