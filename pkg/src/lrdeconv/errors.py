"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, NumericError -> 2,
and I/O failures (OSError) -> 3.
"""


class LrdeconvError(Exception):
    """Base class for package errors."""


class ConfigError(LrdeconvError):
    """Invalid configuration or parameter value; names the violated constraint."""


class NumericError(LrdeconvError):
    """A numeric procedure failed (degenerate fit, embedding failure, ...)."""


class SizeLimitError(NumericError):
    """A dense computation was requested above its configured size limit."""


class MissingFrequencyError(NumericError):
    """A Fourier coefficient required by the analysis is not available."""


class IllPosedFrequencyError(NumericError):
    """All channels are (numerically) blind at a requested frequency."""


class DegenerateFitError(NumericError):
    """A regression/fit had no usable signal (all zero, no spread, ...)."""
