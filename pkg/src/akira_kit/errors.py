"""Exception types shared across the toolkit.

Every error that can surface through the CLI carries enough context to
print a one-line diagnosis (offending file, pixel, residual, ...) without
a traceback.
"""


class AkiraError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(AkiraError):
    """Invalid configuration, parameters, or argument combination."""


class FormatError(AkiraError):
    """Malformed or unreadable file content.

    Parameters
    ----------
    message : str
        Human-readable description.
    path : str, optional
        File the error was detected in.
    offset : int, optional
        Byte offset (binary formats) or line number (text formats) of the
        first offending datum.
    """

    def __init__(self, message, path=None, offset=None):
        self.path = path
        self.offset = offset
        parts = [message]
        if path is not None:
            parts.append(f"file={path}")
        if offset is not None:
            parts.append(f"offset={offset}")
        super().__init__(": ".join(parts))


class NumericError(AkiraError):
    """Numeric failure (non-convergence, degenerate input, NaN)."""


class BehindCameraError(NumericError):
    """Projection requested for a point at or behind the camera plane."""


class InversionError(NumericError):
    """Iterative inversion failed to reach the requested tolerance."""

    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual={residual:.6g} px)"
        super().__init__(message)


class UnsupportedDistortionError(NumericError):
    """Distortion coefficients outside the invertible (radially monotone) regime."""
