"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all evact errors."""


class ParseError(ToolkitError):
    """Malformed input data. Carries the byte offset of the bad record."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ValidationError(ToolkitError):
    """Structurally valid data that violates a domain invariant."""


class FormatError(ToolkitError):
    """Binary container violation (bad magic, truncation, bad payload)."""


class BadMagicError(FormatError):
    """File does not start with the expected magic bytes."""


class TruncatedPayloadError(FormatError):
    """File ends before the header-declared payload."""


class NonFiniteError(FormatError):
    """Payload contains NaN or infinite values."""


class ConfigError(ToolkitError):
    """Invalid configuration or argument combination."""


class TrainingDivergedError(ToolkitError):
    """Loss became non-finite during optimization."""

    def __init__(self, epoch):
        super().__init__(f"training loss became non-finite at epoch {epoch}")
        self.epoch = epoch


class PosteriorError(ToolkitError):
    """Laplace posterior could not be formed or used."""


class EnsembleMemberError(ToolkitError):
    """Training or fitting failed for one ensemble member."""

    def __init__(self, index, cause):
        super().__init__(f"ensemble member {index} failed: {cause}")
        self.index = index
