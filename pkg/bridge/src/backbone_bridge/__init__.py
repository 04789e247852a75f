"""Adapter from exported event-frame files to feature interchange files
via a frozen torch vision backbone."""

from .backbones import BackboneError, ToyCnn, resolve_backbone
from .extract import BridgeConfig, expand_channels, extract
from .formats import FrameFileError, FrameStack, read_frame_file, write_feature_file

__version__ = "0.1.0"

__all__ = [
    "BackboneError",
    "BridgeConfig",
    "FrameFileError",
    "FrameStack",
    "ToyCnn",
    "expand_channels",
    "extract",
    "read_frame_file",
    "resolve_backbone",
    "write_feature_file",
    "__version__",
]
