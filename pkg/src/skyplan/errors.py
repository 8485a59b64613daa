"""Exception hierarchy shared across the toolkit."""


class SkyplanError(Exception):
    """Base class for all toolkit errors."""


class DomainError(SkyplanError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class MapFormatError(SkyplanError):
    """A map CSV file violates the format; carries the offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class EvaluationError(SkyplanError):
    """A map query cannot be answered (out of extent, NODATA)."""


class ConstraintViolationError(SkyplanError):
    """A candidate solution violates a hard placement constraint."""


class ConfigError(SkyplanError):
    """A run configuration is inconsistent or contains unknown keys."""


class GatewayError(SkyplanError):
    """Transport or protocol failure talking to the chat-completion endpoint."""


class SizeError(SkyplanError):
    """A brute-force enumeration request is too large to run."""
