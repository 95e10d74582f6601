"""Exception types shared across the package.

Every public operation raises one of these instead of a bare ValueError so
callers (and the CLI exit-code mapping) can tell input mistakes apart from
numerical breakdowns.
"""


class PreimageForgeError(Exception):
    """Base class for all package errors."""


class DimensionError(PreimageForgeError):
    """Shapes or sizes are inconsistent (wrong rank, mismatched lengths, ...)."""


class DataError(PreimageForgeError):
    """Array contents violate an invariant (non-finite samples, bad weights)."""


class ParameterError(PreimageForgeError):
    """A scalar or enum argument is out of its documented range."""


class FormatError(PreimageForgeError):
    """A serialized artifact (PPM/PGM, model container, CSV) is malformed."""


class FitError(PreimageForgeError):
    """Kernel parameter fitting could not bracket or reach the target."""


class ConfigError(PreimageForgeError):
    """A run configuration file is invalid (unknown keys, bad types, missing paths)."""


class NumericalError(PreimageForgeError):
    """A computation produced non-finite values.

    ``step`` carries the iteration (or epoch) at which the breakdown was
    detected; ``last_metrics`` optionally carries the last healthy metrics row.
    """

    def __init__(self, message, step=None, last_metrics=None):
        super().__init__(message)
        self.step = step
        self.last_metrics = last_metrics
