"""Exception hierarchy shared by all modules."""


class HJRareError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(HJRareError):
    """Invalid run configuration or model specification."""


class NumericalError(HJRareError):
    """A numerical routine could not deliver the requested accuracy."""


class NonConvex(NumericalError):
    pass


class BelowCritical(NumericalError):
    """Energy level below the local critical level (negative discriminant)."""


class QuadratureFailure(NumericalError):
    pass


class Unbounded(NumericalError):
    pass


class WrongModel(HJRareError, TypeError):
    """Operation requested for a model family that does not support it."""
