"""Exception hierarchy shared by all quadnc modules."""


class QuadncError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(QuadncError, ValueError):
    """A state parameter lies outside its physical domain."""


class InputError(QuadncError, ValueError):
    """Caller-supplied data is malformed (non-finite values, bad sizes, empty batches)."""


class EmptyFeatureError(InputError):
    """Every event of a batch fell outside the histogram range."""


class ModelError(QuadncError, ValueError):
    """Model shapes do not match the data they are applied to."""


class TrainingError(QuadncError, RuntimeError):
    pass


class ConfigError(QuadncError, ValueError):
    pass


class FormatError(QuadncError, ValueError):
    """A file on disk could not be parsed."""


class InternalError(QuadncError, RuntimeError):
    """A numerical invariant was violated; indicates a bug, not bad input."""
