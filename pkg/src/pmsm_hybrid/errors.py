"""Exception hierarchy shared across the package."""


class PmsmHybridError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PmsmHybridError, ValueError):
    """Invalid configuration (ranges, grid counts, fractions, unknown keys)."""


class ParamRangeError(PmsmHybridError, ValueError):
    """A design parameter lies outside its configured range."""

    def __init__(self, field, value, lo, hi):
        self.field = field
        self.value = value
        self.lo = lo
        self.hi = hi
        super().__init__(f"{field}={value!r} outside range [{lo}, {hi}]")


class ModelError(PmsmHybridError):
    """Forward-model failure during dataset generation, with the design index."""

    def __init__(self, design_index, cause):
        self.design_index = design_index
        self.cause = cause
        super().__init__(f"design {design_index}: {cause}")


class ShapeError(PmsmHybridError, ValueError):
    """Array dimensions do not match what an operation expects."""


class NumericError(PmsmHybridError, FloatingPointError):
    """Non-finite values appeared inside the network."""

    def __init__(self, layer_index, message="non-finite activation"):
        self.layer_index = layer_index
        super().__init__(f"{message} at layer {layer_index}")


class TrainingError(PmsmHybridError, RuntimeError):
    """Training diverged; carries the history recorded so far."""

    def __init__(self, message, history):
        self.history = history
        super().__init__(message)


class PersistenceError(PmsmHybridError, IOError):
    """Base class for file-format errors."""


class FormatError(PersistenceError):
    """Wrong magic bytes or malformed header."""


class VersionError(PersistenceError):
    """File written by an unsupported schema version."""


class TruncatedFileError(PersistenceError):
    """File shorter than its header declares."""


class ChecksumError(PersistenceError):
    """CRC of header and payload does not match the stored value."""
