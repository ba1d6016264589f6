"""Exception types shared across the package."""


class PressureLabError(Exception):
    """Base class for all package errors."""


class ValidationError(PressureLabError, ValueError):
    """Input failed validation. ``field`` names the offending key when known."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class BudgetExceeded(PressureLabError):
    """A computation would exceed a configured budget."""

    def __init__(self, message, key):
        super().__init__(f"{message} (raise '{key}' to allow it)")
        self.key = key
