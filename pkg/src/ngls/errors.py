"""Exception types shared by every module."""


class NGLSError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(NGLSError, ValueError):
    """Invalid system, frequency vector or run configuration.

    ``path`` names the offending field (``"symbols[1].lengths"``) when known.
    """

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class DigitError(NGLSError, ValueError):
    """A digit is not admissible for the system it is applied to."""


class DivergentTailError(NGLSError, ArithmeticError):
    """A tail sum such as sum_{b>m} N_b^{-t} diverges at the requested exponent."""


class CombinatorialGuardError(NGLSError, RuntimeError):
    """An enumeration would exceed its configured candidate cap."""


class StreamExhaustedError(NGLSError, ValueError):
    """A digit stream ended before the requested depth was reached."""
