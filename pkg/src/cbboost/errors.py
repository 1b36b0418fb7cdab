"""Exception hierarchy shared across the package."""


class CBBoostError(Exception):
    """Base class for all package errors."""


class DataError(CBBoostError):
    """A file could not be parsed into a dataset."""


class LabelError(DataError):
    """Labels violate the contract of the declared task."""


class TaskError(DataError):
    """The declared task is inconsistent with the data (e.g. K < 2)."""


class SplitError(CBBoostError):
    """A train/test or fold split cannot be built as requested."""


class ParameterError(CBBoostError):
    """A loss or booster parameter is outside its documented range."""


class CapabilityError(ParameterError):
    """The (loss kind, task) pair is not in the supported-combination table."""


class ShapeError(CBBoostError):
    """Prediction input shape does not match the trained model."""


class ModelFormatError(CBBoostError):
    """A model file is corrupted, truncated, or has an unknown version."""


class SearchError(CBBoostError):
    """Hyperparameter search could not produce any usable trial."""


class ConfigError(CBBoostError):
    """A run configuration is invalid; carries the offending key."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
