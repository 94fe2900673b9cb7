"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Matrix shapes are incompatible with the requested operation."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class SingularMatrixError(ArithmeticError):
    """Raised when a matrix is numerically singular.

    ``min_abs_eigenvalue`` carries the offending smallest eigenvalue
    magnitude so callers can log or count the degenerate draw.
    """

    def __init__(self, min_abs_eigenvalue, threshold=None):
        self.min_abs_eigenvalue = float(min_abs_eigenvalue)
        self.threshold = None if threshold is None else float(threshold)
        msg = f"matrix is numerically singular (min |eigenvalue| = {self.min_abs_eigenvalue:.3e}"
        if self.threshold is not None:
            msg += f", threshold {self.threshold:.3e}"
        super().__init__(msg + ")")


class ConfigError(ValueError):
    """Invalid ensemble or experiment configuration.

    ``field`` names the offending key using dotted paths, e.g. ``ensemble.n``.
    """

    def __init__(self, message, field=None):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}" if field else message)


class ConfigParseError(ConfigError):
    """Config text is not well-formed JSON."""

    def __init__(self, message, line, column):
        self.line = line
        self.column = column
        super().__init__(f"malformed JSON at line {line}, column {column}: {message}")


class UnsupportedFamilyError(ConfigError):
    """The ensemble family cannot be used with the requested operation."""
