"""Exception and warning types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented precondition."""


class ParseError(ValidationError):
    """CSV ingestion failed on a specific line."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateDataError(ValueError):
    """The data carries no usable signal (all singular values below floor)."""


class EnsembleError(RuntimeError):
    """Too many Monte Carlo realizations failed to form an ensemble."""


class InstabilityWarning(UserWarning):
    """A forecast propagates eigenvalues beyond the growth guard."""
