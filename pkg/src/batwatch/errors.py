"""Exception hierarchy shared across the pipeline.

Each class maps to one failure family so callers (and the CLI exit-code
table) can discriminate without string matching.
"""


class BatwatchError(Exception):
    """Base class for all library errors."""


class ShapeError(BatwatchError, ValueError):
    """Array dimensions violate an operation's contract."""


class ConfigError(BatwatchError, ValueError):
    """A configuration value is out of its allowed range."""


class EmptyDataError(BatwatchError, ValueError):
    """A pipeline stage received no usable data."""


class TrainingError(BatwatchError, RuntimeError):
    """Training produced a non-finite loss or gradient."""


class CalibrationError(BatwatchError, ValueError):
    """Calibration statistics are unusable or tied to a different model."""


class ProvenanceError(BatwatchError, ValueError):
    """A window does not belong to the stream it is matched against."""


class ModelFormatError(BatwatchError, ValueError):
    """A persisted model file is malformed or has an unknown version."""
